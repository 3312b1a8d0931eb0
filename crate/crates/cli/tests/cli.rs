// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn sl2rmp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sl2rmp")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// Data rows keyed by header, skipping the `#` block.
fn rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let data = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, data)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn find_row(data: &[Vec<String>], col: usize, value: f64) -> &[String] {
    data.iter().find(|r| r[col].parse::<f64>().unwrap() == value).unwrap()
}

#[test]
fn halperin_figure_has_provenance_and_the_perturbative_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let o = sl2rmp(&["figure", "halperin", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(&format!("# sl2rmp: {}", env!("CARGO_PKG_VERSION"))));
    assert!(text.contains("# parameters: gaussian white noise, sigma = 2"));
    let (h, data) = rows(&text);
    let (g1, g2, st) = (column(&h, "gamma1"), column(&h, "gamma2"), column(&h, "status"));
    assert!(data.iter().all(|r| r[st] == "ok"));
    let row = find_row(&data, column(&h, "energy"), 50.0);
    for c in [g1, g2] {
        let v: f64 = row[c].parse().unwrap();
        assert!((v / 0.005 - 1.0).abs() < 0.1, "{v}");
    }
}

#[test]
fn sparse_figure_matches_the_concentrated_regime_at_k3() {
    let o = sl2rmp(&["figure", "flld"]);
    assert!(o.status.success());
    let (h, data) = rows(&String::from_utf8(o.stdout).unwrap());
    let row = find_row(&data, column(&h, "energy"), 9.0);
    for (a, b) in [("gamma1", "concentrated_gamma1"), ("gamma2", "concentrated_gamma2")] {
        let (x, y): (f64, f64) = (row[column(&h, a)].parse().unwrap(), row[column(&h, b)].parse().unwrap());
        assert!((x / y - 1.0).abs() < 0.1, "{a}: {x} vs {y}");
    }
}

#[test]
fn dense_variance_follows_the_free_growth() {
    let o = sl2rmp(&["figure", "fl0"]);
    assert!(o.status.success());
    let (h, data) = rows(&String::from_utf8(o.stdout).unwrap());
    let row = find_row(&data, column(&h, "energy"), -5.0);
    let v: f64 = row[column(&h, "lambda_variance")].parse().unwrap();
    assert!((v / 5.0 - 1.0).abs() < 1e-3, "{v}");
}

#[test]
fn output_is_deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "an.toml",
        r#"
        seed = 11
        [ensemble]
        variant = "compact"
        k = 1.0
        rho = 1.0
        theta_law = { law = "dirac", value = 0.0 }
        w_law = { law = "gaussian", mean = -0.5, variance = 0.25 }
        u_law = { law = "gaussian", mean = 0.0, variance = 1.0 }
        [monte_carlo]
        replicas = 400
        steps = 50
        q = [-0.5, 0.5]
        "#,
    );
    let a = sl2rmp(&["gle-mc", "--config", &cfg]);
    let b = sl2rmp(&["gle-mc", "--config", &cfg, "--threads", "1"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let c = sl2rmp(&["gle-mc", "--config", &cfg, "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
    let (h, data) = rows(&String::from_utf8(a.stdout).unwrap());
    assert!(data.iter().all(|r| !r[column(&h, "reference")].is_empty()));

    let f1 = sl2rmp(&["figure", "flhd"]);
    let f2 = sl2rmp(&["figure", "flhd", "--threads", "1"]);
    assert_eq!(f1.stdout, f2.stdout);
}

#[test]
fn sweeps_and_density_run_from_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fl.toml",
        r#"
        [levy]
        model = "compound_poisson"
        rho = 1.0
        weights = { law = "exponential", mean = 0.5 }
        [grid]
        energies = [-1.0, 0.0, 1.0]
        [ensemble]
        variant = "compact"
        k = 1.0
        rho = 1.0
        theta_law = { law = "exponential", mean = 1.0 }
        w_law = { law = "dirac", value = 0.0 }
        u_law = { law = "exponential", mean = 0.5 }
        [monte_carlo]
        samples = 20000
        bins = 50
        "#,
    );
    for cmd in ["lyapunov", "variance"] {
        let o = sl2rmp(&[cmd, "--config", &cfg]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let (h, data) = rows(&String::from_utf8(o.stdout).unwrap());
        let st = column(&h, "status");
        assert_eq!(data.len(), 3);
        // E = 0 is flagged and the sweep carries on.
        assert_eq!(data.iter().filter(|r| r[st] != "ok").count(), 1, "{cmd}");
    }
    let o = sl2rmp(&["invariant-density", "--config", &cfg, "--quick"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# k_times_tail: "));
    let (h, data) = rows(&text);
    assert_eq!(data.len(), 50);
    let total: u64 = data
        .iter()
        .map(|r| r[column(&h, "count")].parse::<u64>().unwrap())
        .sum();
    assert!(total <= 20000 / 9 + 16);
}

#[test]
fn configuration_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let corrupt = write(dir.path(), "bad.toml", "seed = 1\n[monte_carlo]\nreplicas = \"many\"\n");
    let o = sl2rmp(&["figure", "halperin", "--config", &corrupt]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("replicas"), "{err}");

    let unknown = write(dir.path(), "unknown.toml", "[grid]\nenergy = [1.0]\n");
    let o = sl2rmp(&["figure", "halperin", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("energy"));

    let decreasing = write(dir.path(), "dec.toml", "[grid]\nenergies = [2.0, 1.0]\n");
    assert_eq!(
        sl2rmp(&["figure", "halperin", "--config", &decreasing]).status.code(),
        Some(3)
    );
    assert_eq!(sl2rmp(&["lyapunov"]).status.code(), Some(3));
    assert_eq!(sl2rmp(&["figure", "nope"]).status.code(), Some(3));
    let missing = dir.path().join("absent.toml");
    assert_eq!(
        sl2rmp(&["validate", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn all_failed_rows_are_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "zero.toml",
        "[levy]\nmodel = \"compound_poisson\"\nrho = 1.0\nweights = { law = \"exponential\", mean = 0.5 }\n[grid]\nenergies = [0.0]\n",
    );
    let o = sl2rmp(&["lyapunov", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8(o.stdout).unwrap().contains("error: "));
}

#[test]
fn validate_reports_each_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.toml", "[validate]\ncriteria = [2, 6]\n");
    let out = dir.path().join("report.txt");
    let o = sl2rmp(&["validate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let report = std::fs::read_to_string(out).unwrap();
    assert!(report.contains("criterion  2 [PASS]") && report.contains("criterion  6 [PASS]"));
    assert!(report.contains("2 of 2 criteria passed"));
}
