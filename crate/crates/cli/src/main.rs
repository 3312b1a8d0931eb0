// SPDX-License-Identifier: Apache-2.0

//! `sl2rmp`: spectral sweeps, Monte Carlo estimates, figure data and the
//! validation campaign.
//!
//! Exit status: 0 success, 2 validation failure, 3 configuration error,
//! 4 numerical failure, 1 I/O error.

mod commands;
mod config;
mod figures;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sl2rmp_validation::criteria::{run, Mode};

use config::{ConfigError, RunConfig, DEFAULT_SEED};
use figures::FigureName;
use output::Table;

#[derive(Debug, Parser)]
#[command(name = "sl2rmp", version = env!("CARGO_PKG_VERSION"), about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Monte Carlo budgets cut by 9, statistical tolerances widened by 3.
    #[arg(long, global = true)]
    quick: bool,
    /// Worker threads; rayon's default when absent.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// γ₁ and the integrated density of states over the energy grid.
    Lyapunov,
    /// γ₂ and the per-step variance over the energy grid.
    Variance,
    /// Monte Carlo generalised Lyapunov exponents of the ensemble.
    GleMc,
    /// Monte Carlo histogram of the invariant measure of the ensemble.
    InvariantDensity,
    /// Data for one of the reference figures.
    Figure { name: FigureName },
    /// Runs the acceptance criteria.
    Validate,
}

enum Failure {
    Config(ConfigError),
    Numerical(String),
    Validation(usize),
    Io(std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Config(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
            Failure::Validation(n) => write!(f, "{n} criteria failed"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Rows were flagged: the table is still written, and the run counts as a
/// numerical failure only when nothing succeeded.
fn check_rows(failed: usize, table: &Table) -> Result<(), Failure> {
    if failed > 0 {
        eprintln!("warning: {failed} of {} rows flagged", table.rows.len());
    }
    if failed == table.rows.len() {
        return Err(Failure::Numerical("every row failed".into()));
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError::Invalid {
                field: "--threads",
                reason: "must be positive".into(),
            }
            .into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Numerical(e.to_string()))?;
    }
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let echo = cfg.echo();
    let opts = cfg.spectral.options();
    let budget = if cli.quick {
        cfg.monte_carlo.quick()
    } else {
        cfg.monte_carlo.clone()
    };
    let grid = || {
        cfg.grid
            .as_ref()
            .ok_or(ConfigError::Missing("grid"))
            .and_then(|g| g.energies())
    };
    let out = cli.out.as_deref();

    match &cli.command {
        Command::Lyapunov | Command::Variance => {
            let model = cfg.levy.ok_or(ConfigError::Missing("levy"))?;
            let energies = grid()?;
            let (label, f): (_, fn(_, _, _, _) -> usize) = match cli.command {
                Command::Lyapunov => ("lyapunov", commands::lyapunov),
                _ => ("variance", commands::variance),
            };
            let mut table = Table::new(label, seed, echo, vec![]);
            let failed = f(&model, &energies, &opts, &mut table);
            table.emit(out)?;
            check_rows(failed, &table)
        }
        Command::GleMc => {
            let e = cfg.ensemble.ok_or(ConfigError::Missing("ensemble"))?;
            let mut table = Table::new("gle-mc", seed, echo, vec![]);
            let failed = commands::gle_mc(&e, &budget, seed, &mut table);
            table.emit(out)?;
            check_rows(failed, &table)
        }
        Command::InvariantDensity => {
            let e = cfg.ensemble.ok_or(ConfigError::Missing("ensemble"))?;
            let mut table = Table::new("invariant-density", seed, echo, vec![]);
            commands::invariant_density(&e, &budget, seed, &mut table).map_err(Failure::Numerical)?;
            table.emit(out)?;
            Ok(())
        }
        Command::Figure { name } => {
            let energies = match &cfg.grid {
                Some(g) => g.energies()?,
                None => figures::default_grid(*name),
            };
            let mut table = Table::new(format!("figure {}", name.label()), seed, echo, vec![]);
            let failed = figures::run_figure(*name, &energies, &opts, &mut table);
            table.emit(out)?;
            check_rows(failed, &table)
        }
        Command::Validate => {
            let mode = if cli.quick { Mode::quick(seed) } else { Mode::full(seed) };
            let ids = cfg.validate.criteria.clone().unwrap_or_else(|| (1..=12).collect());
            let mut sink: Option<std::fs::File> = out.map(std::fs::File::create).transpose()?;
            if let Some(f) = sink.as_mut() {
                writeln!(f, "# sl2rmp: {}", output::version())?;
                writeln!(f, "# seed: {seed}, quick: {}", cli.quick)?;
            }
            let mut failed = 0;
            for id in &ids {
                let r = run(*id, mode);
                failed += usize::from(!r.passed);
                println!("{r}");
                if let Some(f) = sink.as_mut() {
                    writeln!(f, "{r}")?;
                }
            }
            let summary = format!("{} of {} criteria passed", ids.len() - failed, ids.len());
            println!("{summary}");
            if let Some(f) = sink.as_mut() {
                writeln!(f, "{summary}")?;
            }
            if failed > 0 {
                return Err(Failure::Validation(failed));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sl2rmp: {f}");
            ExitCode::from(f.code())
        }
    }
}
