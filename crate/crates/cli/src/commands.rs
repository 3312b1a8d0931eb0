// SPDX-License-Identifier: Apache-2.0

//! Sweeps and Monte Carlo commands.

use rayon::prelude::*;
use sl2rmp::closedform::{an_gle, ktilde_gle};
use sl2rmp::ensembles::{LevyModel, MatrixEnsemble, ParameterLaw};
use sl2rmp::montecarlo::{gle_direct_with, invariant_density_with, DensityOptions, McOptions};
use sl2rmp::sl2core::Variant;
use sl2rmp::spectral::{report, SpectralOptions};

use crate::config::McBudget;
use crate::output::{flagged, num, opt, Table, OK};

/// `γ₁` and `𝒩` (and the per-step `λ₁` for compound Poisson models) over
/// the grid. Returns the number of flagged rows.
pub fn lyapunov(model: &LevyModel, energies: &[f64], opts: &SpectralOptions, table: &mut Table) -> usize {
    let rho = match model {
        LevyModel::CompoundPoisson { rho, .. } => Some(*rho),
        LevyModel::GaussianWhiteNoise { .. } => None,
    };
    table.columns = vec!["energy", "gamma1", "idos", "lambda1", "status"];
    let rows: Vec<_> = energies.par_iter().map(|&e| (e, report(model, e, opts))).collect();
    let mut failed = 0;
    for (e, r) in rows {
        table.rows.push(match r {
            Ok(r) => vec![
                num(e),
                num(r.gamma1),
                num(r.idos),
                opt(rho.map(|rho| r.gamma1 / rho)),
                OK.into(),
            ],
            Err(err) => {
                failed += 1;
                vec![num(e), String::new(), String::new(), String::new(), flagged(err)]
            }
        });
    }
    failed
}

/// `γ₂`, and for compound Poisson models `λ₂` and the per-step variance
/// `λ₁² - λ₂`.
pub fn variance(model: &LevyModel, energies: &[f64], opts: &SpectralOptions, table: &mut Table) -> usize {
    let rho = match model {
        LevyModel::CompoundPoisson { rho, .. } => Some(*rho),
        LevyModel::GaussianWhiteNoise { .. } => None,
    };
    table.columns = vec!["energy", "gamma1", "gamma2", "lambda2", "lambda_variance", "status"];
    let rows: Vec<_> = energies.par_iter().map(|&e| (e, report(model, e, opts))).collect();
    let mut failed = 0;
    for (e, r) in rows {
        table.rows.push(match r {
            Ok(r) => {
                let var = rho.zip(r.lambda2).map(|(rho, l2)| (r.gamma1 / rho).powi(2) - l2);
                vec![
                    num(e),
                    num(r.gamma1),
                    num(r.gamma2),
                    opt(r.lambda2),
                    opt(var),
                    OK.into(),
                ]
            }
            Err(err) => {
                failed += 1;
                let mut row = vec![num(e)];
                row.extend(std::iter::repeat(String::new()).take(4));
                row.push(flagged(err));
                row
            }
        });
    }
    failed
}

/// Closed-form `Λ̃(q)` for the ensembles that have one.
fn reference_gle(e: &MatrixEnsemble, q: f64) -> Option<f64> {
    let zero = |l: &ParameterLaw| l.mean() == 0.0 && l.raw_moments(2)[2] == 0.0;
    if zero(&e.theta_law) && !zero(&e.w_law) {
        return an_gle(&e.w_law, q).ok();
    }
    if let (Variant::Hyperbolic, ParameterLaw::Exponential { mean }) = (e.variant, e.theta_law) {
        if zero(&e.w_law) && zero(&e.u_law) {
            return ktilde_gle(e.k, 1.0 / mean, q).ok();
        }
    }
    None
}

/// Direct estimates of `Λ̃(q)` on the configured `q` grid.
pub fn gle_mc(e: &MatrixEnsemble, budget: &McBudget, seed: u64, table: &mut Table) -> usize {
    table.note("steps", budget.steps);
    table.note("replicas", budget.replicas);
    table.note("burn_in", budget.burn_in);
    table.columns = vec!["q", "gle", "se", "ess", "reference", "warning", "status"];
    let opts = McOptions {
        burn_in: budget.burn_in as f64,
        ..McOptions::default()
    };
    let mut failed = 0;
    // Every q reuses the same trajectories.
    for &q in &budget.q {
        let reference = reference_gle(e, q);
        table.rows.push(
            match gle_direct_with(e, budget.steps, budget.replicas, q, seed, &opts) {
                Ok(g) => vec![
                    num(q),
                    num(g.value),
                    num(g.se),
                    num(g.ess),
                    opt(reference),
                    g.warning.unwrap_or_default(),
                    OK.into(),
                ],
                Err(err) => {
                    failed += 1;
                    vec![
                        num(q),
                        String::new(),
                        String::new(),
                        String::new(),
                        opt(reference),
                        String::new(),
                        flagged(err),
                    ]
                }
            },
        );
    }
    failed
}

/// Histogram of the stationary Riccati variable in `t = arctan z`.
pub fn invariant_density(e: &MatrixEnsemble, budget: &McBudget, seed: u64, table: &mut Table) -> Result<(), String> {
    let opts = DensityOptions {
        bins: budget.bins,
        tail_cut: budget.tail_cut,
        ..DensityOptions::default()
    };
    let h = invariant_density_with(e, budget.burn_in, budget.samples, seed, &opts).map_err(|e| e.to_string())?;
    let tail = h.tail_statistic();
    table.note("samples", h.samples);
    table.note("burn_in", budget.burn_in);
    table.note("tail_cut", h.tail_cut);
    table.note("tail_right", format!("{} +- {}", h.tail_right.value, h.tail_right.se));
    table.note("tail_left", format!("{} +- {}", h.tail_left.value, h.tail_left.se));
    table.note("k_times_tail", format!("{} +- {}", e.k * tail.value, e.k * tail.se));
    table.columns = vec!["t_lo", "t_hi", "z_mid", "count", "density_t"];
    for (w, &c) in h.edges.windows(2).zip(&h.counts) {
        let width = w[1] - w[0];
        table.rows.push(vec![
            num(w[0]),
            num(w[1]),
            num((0.5 * (w[0] + w[1])).tan()),
            c.to_string(),
            num(c as f64 / (h.samples as f64 * width)),
        ]);
    }
    Ok(())
}
