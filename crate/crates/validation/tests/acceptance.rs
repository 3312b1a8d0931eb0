// SPDX-License-Identifier: Apache-2.0

//! Runs the twelve acceptance criteria and prints one line per criterion.
//! Set `SL2RMP_QUICK=1` for reduced budgets.
//!
//! Built without the libtest harness so the lines are printed on success too.

use std::process::ExitCode;

use sl2rmp_validation::criteria::{run_all, Mode};

fn main() -> ExitCode {
    let quick = std::env::var("SL2RMP_QUICK").is_ok_and(|v| v != "0");
    let mode = if quick { Mode::quick(2024) } else { Mode::full(2024) };
    let reports = run_all(mode);
    for r in &reports {
        println!("{r}");
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} of {} criteria passed", reports.len() - failed.len(), reports.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
