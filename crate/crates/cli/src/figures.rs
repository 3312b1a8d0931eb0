// SPDX-License-Identifier: Apache-2.0

//! Predefined parameter sets for the reference figures.

use clap::ValueEnum;
use rayon::prelude::*;
use sl2rmp::closedform::{
    concentrated_regime, halperin_asymptotic, phase_formalism_estimate, sps_diagnostics, weak_disorder_fl,
};
use sl2rmp::ensembles::{LevyModel, ParameterLaw};
use sl2rmp::spectral::{report, SpectralOptions, SpectralReport};

use crate::output::{flagged, num, opt, Table, OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    /// Per-step cumulants of the Frisch–Lloyd model at ρ = 1, v̄ = 0.01.
    Fl0,
    /// γ₁ and γ₂ of the Frisch–Lloyd model at ρ = 1, v̄ = 0.01.
    Flhd,
    /// γ₁ and γ₂ of the Frisch–Lloyd model at ρ = 1, v̄ = 100.
    Flld,
    /// Gaussian white noise with σ = 2.
    Halperin,
    /// γ₂/γ₁ against π𝒩/γ₁ in both Frisch–Lloyd regimes.
    RatioDeych,
}

impl FigureName {
    pub fn label(self) -> &'static str {
        match self {
            Self::Fl0 => "fl0",
            Self::Flhd => "flhd",
            Self::Flld => "flld",
            Self::Halperin => "halperin",
            Self::RatioDeych => "ratio-deych",
        }
    }
}

const RHO: f64 = 1.0;
const VBAR_DENSE: f64 = 0.01;
const VBAR_SPARSE: f64 = 100.0;
const SIGMA: f64 = 2.0;

fn fl(vbar: f64) -> LevyModel {
    LevyModel::compound_poisson(RHO, ParameterLaw::exponential(vbar))
}

/// `E ∈ [-5, 5]` in steps of 1/4, without `E = 0`.
fn linear_grid() -> Vec<f64> {
    (-20..=20).filter(|&j| j != 0).map(|j| 0.25 * j as f64).collect()
}

/// `k²` for `k = 3 · 2^{m/4}`, `m ∈ [-12, 16]`, exact for even `m`.
fn squares() -> Vec<f64> {
    (-12..=16).map(|m| 9.0 * 2f64.powf(m as f64 / 2.0)).collect()
}

/// `E = ±k²` over the same `k`, increasing.
fn quadratic_grid() -> Vec<f64> {
    let k2 = squares();
    let mut e: Vec<f64> = k2.iter().rev().map(|e| -e).collect();
    e.extend(k2);
    e
}

pub fn default_grid(name: FigureName) -> Vec<f64> {
    match name {
        FigureName::Fl0 | FigureName::Flhd => linear_grid(),
        FigureName::Flld => quadratic_grid(),
        FigureName::Halperin => (-30..=30).map(|j| 2.0 * j as f64).collect(),
        FigureName::RatioDeych => squares(),
    }
}

/// Fills `table` with the rows of `name` on `energies`. Rows whose solve
/// fails carry the error in the `status` column; returns their number.
pub fn run_figure(name: FigureName, energies: &[f64], opts: &SpectralOptions, table: &mut Table) -> usize {
    table.note("figure", name.label());
    let solve = |model: &LevyModel| -> Vec<Result<SpectralReport, String>> {
        energies
            .par_iter()
            .map(|&e| report(model, e, opts).map_err(|err| err.to_string()))
            .collect()
    };
    let mut failed = 0;
    let mut status = |r: &Result<SpectralReport, String>| match r {
        Ok(_) => OK.to_string(),
        Err(e) => {
            failed += 1;
            flagged(e)
        }
    };
    match name {
        FigureName::Fl0 => {
            table.note(
                "parameters",
                format!("frisch-lloyd, rho = {RHO}, exponential weights vbar = {VBAR_DENSE}"),
            );
            table.note(
                "reference",
                "free_* columns: v = 0, lambda1 = k/rho and variance (k/rho)^2 for E < 0, both 0 for E > 0",
            );
            table.columns = vec![
                "energy",
                "gamma1",
                "lambda1",
                "lambda_variance",
                "idos",
                "free_lambda1",
                "free_lambda_variance",
                "status",
            ];
            for (&e, r) in energies.iter().zip(solve(&fl(VBAR_DENSE))) {
                let k = e.abs().sqrt();
                let free = if e < 0.0 { k / RHO } else { 0.0 };
                let vals = r.as_ref().ok();
                let l1 = vals.map(|r| r.gamma1 / RHO);
                let var = vals.and_then(|r| r.lambda2.map(|l2| (r.gamma1 / RHO).powi(2) - l2));
                table.rows.push(vec![
                    num(e),
                    opt(vals.map(|r| r.gamma1)),
                    opt(l1),
                    opt(var),
                    opt(vals.map(|r| r.idos)),
                    num(free),
                    num(free * free),
                    status(&r),
                ]);
            }
        }
        FigureName::Flhd => {
            let law = ParameterLaw::exponential(VBAR_DENSE);
            let m2 = law.raw_moments(2)[2];
            table.note(
                "parameters",
                format!("frisch-lloyd, rho = {RHO}, exponential weights vbar = {VBAR_DENSE}"),
            );
            table.note(
                "reference",
                "weak_disorder = rho<v^2>/(8E) for E > 0; phase_* from the phase formalism",
            );
            table.columns = vec![
                "energy",
                "gamma1",
                "gamma2",
                "idos",
                "weak_disorder",
                "phase_gamma1",
                "phase_gamma2",
                "status",
            ];
            for (&e, r) in energies.iter().zip(solve(&fl(VBAR_DENSE))) {
                let vals = r.as_ref().ok();
                let weak = (e > 0.0).then(|| weak_disorder_fl(e, RHO, m2).0);
                let (p1, p2) = phase_formalism_estimate(RHO, &law, e.abs().sqrt(), e.signum());
                table.rows.push(vec![
                    num(e),
                    opt(vals.map(|r| r.gamma1)),
                    opt(vals.map(|r| r.gamma2)),
                    opt(vals.map(|r| r.idos)),
                    opt(weak),
                    num(p1),
                    num(p2),
                    status(&r),
                ]);
            }
        }
        FigureName::Flld => {
            table.note(
                "parameters",
                format!("frisch-lloyd, rho = {RHO}, exponential weights vbar = {VBAR_SPARSE}"),
            );
            table.note("reference", "concentrated_* for E > 0, valid for rho << k << vbar");
            table.columns = vec![
                "energy",
                "k",
                "gamma1",
                "gamma2",
                "idos",
                "concentrated_gamma1",
                "concentrated_gamma2",
                "status",
            ];
            for (&e, r) in energies.iter().zip(solve(&fl(VBAR_SPARSE))) {
                let k = e.abs().sqrt();
                let vals = r.as_ref().ok();
                let conc = (e > 0.0).then(|| concentrated_regime(RHO, VBAR_SPARSE, k));
                table.rows.push(vec![
                    num(e),
                    num(k),
                    opt(vals.map(|r| r.gamma1)),
                    opt(vals.map(|r| r.gamma2)),
                    opt(vals.map(|r| r.idos)),
                    opt(conc.as_ref().map(|a| a.gamma1)),
                    opt(conc.as_ref().map(|a| a.gamma2)),
                    status(&r),
                ]);
            }
        }
        FigureName::Halperin => {
            table.note("parameters", format!("gaussian white noise, sigma = {SIGMA}"));
            table.note("reference", "asymptotic_* for |E| >> sigma^(2/3)");
            table.columns = vec![
                "energy",
                "gamma1",
                "gamma2",
                "idos",
                "asymptotic_gamma1",
                "asymptotic_gamma2",
                "status",
            ];
            for (&e, r) in energies.iter().zip(solve(&LevyModel::gaussian_white_noise(SIGMA))) {
                let vals = r.as_ref().ok();
                let a = (e != 0.0).then(|| halperin_asymptotic(e, SIGMA));
                table.rows.push(vec![
                    num(e),
                    opt(vals.map(|r| r.gamma1)),
                    opt(vals.map(|r| r.gamma2)),
                    opt(vals.map(|r| r.idos)),
                    opt(a.as_ref().map(|a| a.gamma1)),
                    opt(a.as_ref().map(|a| a.gamma2)),
                    status(&r),
                ]);
            }
        }
        FigureName::RatioDeych => {
            table.note(
                "parameters",
                format!("frisch-lloyd, rho = {RHO}, exponential weights vbar = {VBAR_DENSE} (dense) and {VBAR_SPARSE} (sparse)"),
            );
            table.note("reference", "ratio = gamma2/gamma1; deych = pi*idos/gamma1");
            table.columns = vec![
                "regime", "vbar", "energy", "gamma1", "gamma2", "idos", "ratio", "deych", "status",
            ];
            for (regime, vbar) in [("dense", VBAR_DENSE), ("sparse", VBAR_SPARSE)] {
                for (&e, r) in energies.iter().zip(solve(&fl(vbar))) {
                    let vals = r.as_ref().ok();
                    let d = vals.map(|r| sps_diagnostics(r.gamma1, r.gamma2, r.idos));
                    table.rows.push(vec![
                        regime.into(),
                        num(vbar),
                        num(e),
                        opt(vals.map(|r| r.gamma1)),
                        opt(vals.map(|r| r.gamma2)),
                        opt(vals.map(|r| r.idos)),
                        opt(d.map(|d| d.0)),
                        opt(d.map(|d| d.1)),
                        status(&r),
                    ]);
                }
            }
        }
    }
    failed
}
