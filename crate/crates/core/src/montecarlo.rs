// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo estimators for matrix products, the fixed-length
//! Frisch–Lloyd process, the Riccati chain and an Ornstein–Uhlenbeck
//! calibration case.
//!
//! Every replica owns a ChaCha8 stream `(seed, replica index)`, results are
//! collected in replica order and reduced sequentially, so estimates are
//! bit-identical for a given seed whatever the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensembles::{EnsembleError, MatrixEnsemble, ParameterLaw};
use crate::sl2core::{SlMatrix, Variant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("effective sample size {ess:.1} below 30")]
    EffectiveSampleCollapse { ess: f64 },
    #[error("segment lengths must be exponential for the fixed-length process")]
    NotPoisson,
    #[error("invalid budget: {0}")]
    InvalidBudget(&'static str),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

/// How replicas are dispatched. Results do not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is on.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// RNG of one replica.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Runs `f` on every replica and returns the results in replica order.
pub fn map_replicas<T, F>(exec: Execution, seed: u64, replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    let run = |i: usize| {
        let mut rng = replica_rng(seed, i as u64);
        f(i as u64, &mut rng)
    };
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..replicas).into_par_iter().map(run).collect()
        }
        _ => (0..replicas).map(run).collect(),
    }
}

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// `|value - reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.value - reference).abs() / self.se
    }

    pub fn within(&self, reference: f64, n_se: f64) -> bool {
        self.z_score(reference) <= n_se
    }

    pub fn relative_se(&self) -> f64 {
        self.se / self.value.abs()
    }
}

/// Sample mean and its standard error.
pub fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Estimate {
        value: mean,
        se: (var / n).sqrt(),
    }
}

/// Unbiased sample variance and its standard error from the fourth moment.
pub fn variance_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let s2 = m2 * n / (n - 1.0).max(1.0);
    let var_s2 = ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0);
    Estimate {
        value: s2,
        se: var_s2.sqrt(),
    }
}

/// Per-step or per-length cumulants of `ln‖Π x₀‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantEstimate {
    pub mean_rate: Estimate,
    pub var_rate: Estimate,
    /// Number of steps or length.
    pub scale: f64,
    pub replicas: usize,
    pub seed: u64,
}

impl CumulantEstimate {
    fn from_samples(logs: &[f64], scale: f64, seed: u64) -> Self {
        let m = mean_estimate(logs);
        let v = variance_estimate(logs);
        Self {
            mean_rate: Estimate {
                value: m.value / scale,
                se: m.se / scale,
            },
            var_rate: Estimate {
                value: v.value / scale,
                se: v.se / scale,
            },
            scale,
            replicas: logs.len(),
            seed,
        }
    }
}

/// Initial vector; not an eigenvector of any of the one-parameter subgroups,
/// nor of the upper-triangular products `A(w)N(u)`.
pub const DEFAULT_X0: [f64; 2] = [0.6, 0.8];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub x0: [f64; 2],
    /// Steps (or length, for the process) discarded before accumulation.
    pub burn_in: f64,
    /// Renormalise the working vector at least this often.
    pub renorm_every: usize,
    /// Apply every free segment of the process as this many equal pieces.
    pub subdivide_free: u32,
    pub execution: Execution,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            x0: DEFAULT_X0,
            burn_in: 0.0,
            renorm_every: 32,
            subdivide_free: 1,
            execution: Execution::default(),
        }
    }
}

/// Working vector with a scalar log-norm accumulator.
#[derive(Debug, Clone, Copy)]
struct LogVector {
    x: [f64; 2],
    log_norm: f64,
}

impl LogVector {
    fn new(x0: [f64; 2]) -> Self {
        let n = x0[0].hypot(x0[1]);
        Self {
            x: [x0[0] / n, x0[1] / n],
            log_norm: n.ln(),
        }
    }

    #[inline]
    fn renormalise(&mut self) {
        let n = self.x[0].hypot(self.x[1]);
        self.x = [self.x[0] / n, self.x[1] / n];
        self.log_norm += n.ln();
    }

    #[inline]
    fn check(&mut self) {
        let m = self.x[0].abs().max(self.x[1].abs());
        if !(1e-64..=1e64).contains(&m) {
            self.renormalise();
        }
    }

    fn total(&self) -> f64 {
        self.log_norm + self.x[0].hypot(self.x[1]).ln()
    }
}

#[inline]
fn apply_k(variant: Variant, theta: f64, x: [f64; 2]) -> [f64; 2] {
    match variant {
        Variant::Compact => {
            let (s, c) = theta.sin_cos();
            [c * x[0] - s * x[1], s * x[0] + c * x[1]]
        }
        Variant::Hyperbolic => {
            let (s, c) = (theta.sinh(), theta.cosh());
            [c * x[0] + s * x[1], s * x[0] + c * x[1]]
        }
    }
}

#[inline]
fn apply_an(w: f64, u: f64, x: [f64; 2]) -> [f64; 2] {
    let y0 = x[0] + u * x[1];
    if w == 0.0 {
        [y0, x[1]]
    } else {
        [w.exp() * y0, (-w).exp() * x[1]]
    }
}

/// `K̃(θ)x` for large θ with the factor `e^θ/2` moved to the log-norm.
#[inline]
fn apply_k_log(variant: Variant, theta: f64, v: &mut LogVector) {
    if variant == Variant::Hyperbolic && theta > 20.0 {
        let e2 = (-2.0 * theta).exp();
        let [a, b] = v.x;
        v.x = [(1.0 + e2) * a + (1.0 - e2) * b, (1.0 - e2) * a + (1.0 + e2) * b];
        v.log_norm += theta - std::f64::consts::LN_2;
    } else {
        v.x = apply_k(variant, theta, v.x);
    }
}

/// Applies one sampled matrix `K(θ)A(w)N(u)` of the ensemble.
#[inline]
fn step<R: Rng + ?Sized>(e: &MatrixEnsemble, v: &mut LogVector, rng: &mut R) {
    let p = e.sample_params(rng);
    v.x = apply_an(p.w, p.u, v.x);
    apply_k_log(e.variant, p.theta, v);
}

fn product_log<R: Rng + ?Sized>(e: &MatrixEnsemble, n: usize, opts: &McOptions, rng: &mut R) -> f64 {
    product_log_at(e, &[n], opts, rng)[0]
}

/// `ln‖Π_n x₀‖` at increasing checkpoints `n` along one trajectory.
fn product_log_at<R: Rng + ?Sized>(
    e: &MatrixEnsemble,
    checkpoints: &[usize],
    opts: &McOptions,
    rng: &mut R,
) -> Vec<f64> {
    let mut v = LogVector::new(opts.x0);
    for _ in 0..opts.burn_in as usize {
        step(e, &mut v, rng);
        v.check();
    }
    v.renormalise();
    let start = v.log_norm;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut i = 0;
    for &n in checkpoints {
        while i < n {
            step(e, &mut v, rng);
            i += 1;
            if i % opts.renorm_every == 0 {
                v.renormalise();
            } else {
                v.check();
            }
        }
        out.push(v.total() - start);
    }
    out
}

/// Per-step mean and variance of `ln‖Π_n x₀‖` over i.i.d. replicas.
pub fn product_cumulants(
    e: &MatrixEnsemble,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<CumulantEstimate, McError> {
    product_cumulants_with(e, n, replicas, seed, &McOptions::default())
}

pub fn product_cumulants_with(
    e: &MatrixEnsemble,
    n: usize,
    replicas: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<CumulantEstimate, McError> {
    check_budget(n, replicas)?;
    e.validate()?;
    let logs = map_replicas(opts.execution, seed, replicas, |_, rng| product_log(e, n, opts, rng));
    Ok(CumulantEstimate::from_samples(&logs, n as f64, seed))
}

/// `ln‖Π_n x₀‖` for every replica, in replica order.
pub fn product_logs(e: &MatrixEnsemble, n: usize, replicas: usize, seed: u64, opts: &McOptions) -> Vec<f64> {
    map_replicas(opts.execution, seed, replicas, |_, rng| product_log(e, n, opts, rng))
}

fn check_budget(n: usize, replicas: usize) -> Result<(), McError> {
    if n == 0 {
        return Err(McError::InvalidBudget("need at least one step"));
    }
    if replicas < 2 {
        return Err(McError::InvalidBudget("need at least two replicas"));
    }
    Ok(())
}

fn free_flight(e: &MatrixEnsemble, len: f64, pieces: u32, v: &mut LogVector) {
    let piece = e.k * len / pieces as f64;
    for _ in 0..pieces {
        apply_k_log(e.variant, piece, v);
    }
}

/// Propagates the vector over a length `x` of the Poisson process and
/// returns its log-norm growth.
fn process_log<R: Rng + ?Sized>(e: &MatrixEnsemble, x: f64, opts: &McOptions, v: &mut LogVector, rng: &mut R) -> f64 {
    v.renormalise();
    let start = v.log_norm;
    let mut pos = 0.0;
    let mut count = 0usize;
    loop {
        let gap = e.theta_law.sample(rng);
        if pos + gap >= x {
            free_flight(e, x - pos, opts.subdivide_free, v);
            break;
        }
        pos += gap;
        free_flight(e, gap, opts.subdivide_free, v);
        let w = e.w_law.sample(rng);
        let u = e.u_law.sample(rng) / e.k;
        v.x = apply_an(w, u, v.x);
        count += 1;
        if count % opts.renorm_every == 0 {
            v.renormalise();
        } else {
            v.check();
        }
    }
    v.total() - start
}

/// Per-length mean and variance of `ln‖Π_{𝒩(x)} x₀‖` for impurities at the
/// points of a Poisson process, including the final free segment.
pub fn process_cumulants(e: &MatrixEnsemble, x: f64, replicas: usize, seed: u64) -> Result<CumulantEstimate, McError> {
    process_cumulants_with(e, x, replicas, seed, &McOptions::default())
}

pub fn process_cumulants_with(
    e: &MatrixEnsemble,
    x: f64,
    replicas: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<CumulantEstimate, McError> {
    e.validate()?;
    if !matches!(e.theta_law, ParameterLaw::Exponential { .. }) {
        return Err(McError::NotPoisson);
    }
    if !(x > 0.0) || replicas < 2 {
        return Err(McError::InvalidBudget("need x > 0 and at least two replicas"));
    }
    let logs = map_replicas(opts.execution, seed, replicas, |_, rng| {
        let mut v = LogVector::new(opts.x0);
        if opts.burn_in > 0.0 {
            process_log(e, opts.burn_in, opts, &mut v, rng);
        }
        process_log(e, x, opts, &mut v, rng)
    });
    Ok(CumulantEstimate::from_samples(&logs, x, seed))
}

/// Direct estimate of the generalised Lyapunov exponent at one `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GleEstimate {
    /// `(1/n) ln⟨‖Π_n x₀‖^q⟩`.
    pub value: f64,
    pub se: f64,
    /// Kish effective sample size of the weights `‖Π_n x₀‖^q`.
    pub ess: f64,
    /// Set when the parameters fall in the rare-event regime.
    pub warning: Option<String>,
}

impl GleEstimate {
    pub fn as_estimate(&self) -> Estimate {
        Estimate {
            value: self.value,
            se: self.se,
        }
    }
}

/// Log-sum-exp estimate of `(1/n) ln⟨e^{q L}⟩` from samples `L`.
pub fn log_moment(logs: &[f64], q: f64, n: f64) -> Result<GleEstimate, McError> {
    let r = logs.len() as f64;
    if q == 0.0 {
        return Ok(GleEstimate {
            value: 0.0,
            se: 0.0,
            ess: r,
            warning: None,
        });
    }
    let shift = logs.iter().map(|l| q * l).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (q * l - shift).exp()).collect();
    let s1: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    let ess = s1 * s1 / s2;
    if ess < 30.0 {
        return Err(McError::EffectiveSampleCollapse { ess });
    }
    let mean = s1 / r;
    let var = (s2 / r - mean * mean).max(0.0) * r / (r - 1.0);
    // Delta method on ln of the sample mean.
    let se = (var / r).sqrt() / mean / n;
    Ok(GleEstimate {
        value: (mean.ln() + shift) / n,
        se,
        ess,
        warning: None,
    })
}

pub fn gle_direct(e: &MatrixEnsemble, n: usize, replicas: usize, q: f64, seed: u64) -> Result<GleEstimate, McError> {
    gle_direct_with(e, n, replicas, q, seed, &McOptions::default())
}

pub fn gle_direct_with(
    e: &MatrixEnsemble,
    n: usize,
    replicas: usize,
    q: f64,
    seed: u64,
    opts: &McOptions,
) -> Result<GleEstimate, McError> {
    check_budget(n, replicas)?;
    e.validate()?;
    let logs = product_logs(e, n, replicas, seed, opts);
    let mut est = log_moment(&logs, q, n as f64)?;
    if q.abs() > 2.0 || n > 500 {
        est.warning = Some(format!(
            "|q| = {} or n = {n} is in the rare-event regime; the estimate is dominated by few replicas",
            q.abs()
        ));
    }
    Ok(est)
}

/// Growth rate of `ln⟨‖Π_n x₀‖^q⟩` between two horizons of the same
/// trajectories, `[ln⟨‖Π_{n₂}x₀‖^q⟩ - ln⟨‖Π_{n₁}x₀‖^q⟩]/(n₂ - n₁)`. The
/// `x₀`-dependent prefactor of the moment cancels.
pub fn gle_slope(
    e: &MatrixEnsemble,
    n1: usize,
    n2: usize,
    replicas: usize,
    q: f64,
    seed: u64,
    opts: &McOptions,
) -> Result<GleEstimate, McError> {
    if n2 <= n1 {
        return Err(McError::InvalidBudget("need n2 > n1"));
    }
    check_budget(n1.max(1), replicas)?;
    e.validate()?;
    let logs = map_replicas(opts.execution, seed, replicas, |_, rng| {
        let l = product_log_at(e, &[n1, n2], opts, rng);
        (l[0], l[1])
    });
    let r = logs.len() as f64;
    let s1 = logs.iter().map(|l| q * l.0).fold(f64::NEG_INFINITY, f64::max);
    let s2 = logs.iter().map(|l| q * l.1).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<(f64, f64)> = logs
        .iter()
        .map(|l| ((q * l.0 - s1).exp(), (q * l.1 - s2).exp()))
        .collect();
    let m1 = w.iter().map(|x| x.0).sum::<f64>() / r;
    let m2 = w.iter().map(|x| x.1).sum::<f64>() / r;
    let ess = |sel: fn(&(f64, f64)) -> f64| {
        let a: f64 = w.iter().map(sel).sum();
        let b: f64 = w.iter().map(|x| sel(x).powi(2)).sum();
        a * a / b
    };
    let ess = ess(|x| x.0).min(ess(|x| x.1));
    if ess < 30.0 {
        return Err(McError::EffectiveSampleCollapse { ess });
    }
    // Delta method on ln m₂ - ln m₁ with the covariance of the two weights.
    let (mut v11, mut v22, mut v12) = (0.0, 0.0, 0.0);
    for (a, b) in &w {
        let (da, db) = (a / m1 - 1.0, b / m2 - 1.0);
        v11 += da * da;
        v22 += db * db;
        v12 += da * db;
    }
    let var = (v11 + v22 - 2.0 * v12) / (r - 1.0) / r;
    let dn = (n2 - n1) as f64;
    Ok(GleEstimate {
        value: (m2.ln() + s2 - m1.ln() - s1) / dn,
        se: var.max(0.0).sqrt() / dn,
        ess,
        warning: None,
    })
}

/// Histogram of the Riccati variable on the compactified axis `t = arctan z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    /// Bin edges in `t`, from `-π/2` to `π/2`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub samples: u64,
    /// Cut `Z` beyond which the tails are counted.
    pub tail_cut: f64,
    /// `Z · P(z > Z)` and `Z · P(z < -Z)`, estimates of `lim z² f(z)`.
    pub tail_right: Estimate,
    pub tail_left: Estimate,
}

impl DensityHistogram {
    /// Average of both tail statistics; the leading asymmetric correction
    /// cancels between them.
    pub fn tail_statistic(&self) -> Estimate {
        Estimate {
            value: 0.5 * (self.tail_right.value + self.tail_left.value),
            se: 0.5 * self.tail_right.se.hypot(self.tail_left.se),
        }
    }

    /// Empirical CDF in `t` at the bin edges.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0u64;
        let mut out = vec![0.0];
        for c in &self.counts {
            acc += c;
            out.push(acc as f64 / self.samples as f64);
        }
        out
    }

    /// Kolmogorov–Smirnov distance to a CDF given in the `t` coordinate,
    /// evaluated at the bin edges.
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        self.edges
            .iter()
            .zip(self.cdf())
            .map(|(t, c)| (c - cdf(*t)).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOptions {
    pub bins: usize,
    pub tail_cut: f64,
    /// Independent chains the samples are split over.
    pub chains: usize,
    pub x0: [f64; 2],
    pub execution: Execution,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            bins: 400,
            tail_cut: 20.0,
            chains: 16,
            x0: DEFAULT_X0,
            execution: Execution::default(),
        }
    }
}

/// Runs `chains` Riccati chains and feeds every direction after burn-in to
/// `visit`, which accumulates into a per-chain state.
#[allow(clippy::too_many_arguments)]
fn run_chains<S, F>(
    e: &MatrixEnsemble,
    x0: [f64; 2],
    burn_in: usize,
    samples: usize,
    seed: u64,
    chains: usize,
    exec: Execution,
    init: impl Fn() -> S + Sync,
    visit: F,
) -> Vec<S>
where
    S: Send,
    F: Fn(&mut S, [f64; 2], [f64; 2]) + Sync,
{
    let per_chain = samples.div_ceil(chains);
    map_replicas(exec, seed, chains, |_, rng| {
        let mut state = init();
        let mut v = LogVector::new(x0);
        for _ in 0..burn_in {
            step(e, &mut v, rng);
            v.check();
        }
        v.renormalise();
        for _ in 0..per_chain {
            let before = v.x;
            step(e, &mut v, rng);
            v.renormalise();
            visit(&mut state, before, v.x);
        }
        state
    })
}

#[inline]
fn direction_angle(x: [f64; 2]) -> f64 {
    (x[0] / x[1]).atan()
}

/// Histogram of the stationary law of `z_n = 𝓜_n(z_{n-1})`.
pub fn invariant_density(
    e: &MatrixEnsemble,
    burn_in: usize,
    samples: usize,
    seed: u64,
) -> Result<DensityHistogram, McError> {
    invariant_density_with(e, burn_in, samples, seed, &DensityOptions::default())
}

pub fn invariant_density_with(
    e: &MatrixEnsemble,
    burn_in: usize,
    samples: usize,
    seed: u64,
    opts: &DensityOptions,
) -> Result<DensityHistogram, McError> {
    e.validate()?;
    if samples < opts.chains || opts.chains < 2 || opts.bins == 0 {
        return Err(McError::InvalidBudget("need samples ≥ chains ≥ 2 and at least one bin"));
    }
    let half = std::f64::consts::FRAC_PI_2;
    let bins = opts.bins;
    let width = 2.0 * half / bins as f64;
    let t_cut = opts.tail_cut.atan();
    let per_chain = run_chains(
        e,
        opts.x0,
        burn_in,
        samples,
        seed,
        opts.chains,
        opts.execution,
        || (vec![0u64; bins], 0u64, 0u64, 0u64),
        |(counts, n, right, left), _, x| {
            let t = direction_angle(x);
            let b = (((t + half) / width) as usize).min(bins - 1);
            counts[b] += 1;
            *n += 1;
            if t > t_cut {
                *right += 1;
            } else if t < -t_cut {
                *left += 1;
            }
        },
    );
    let mut counts = vec![0u64; bins];
    let mut total = 0u64;
    let (mut rs, mut ls) = (Vec::new(), Vec::new());
    for (c, n, r, l) in &per_chain {
        for (acc, ci) in counts.iter_mut().zip(c) {
            *acc += ci;
        }
        total += n;
        rs.push(opts.tail_cut * *r as f64 / *n as f64);
        ls.push(opts.tail_cut * *l as f64 / *n as f64);
    }
    Ok(DensityHistogram {
        edges: (0..=bins).map(|i| -half + i as f64 * width).collect(),
        counts,
        samples: total,
        tail_cut: opts.tail_cut,
        tail_right: mean_estimate(&rs),
        tail_left: mean_estimate(&ls),
    })
}

/// Stationary average of `g(z)` along the Riccati chain, with the standard
/// error taken across independent chains.
pub fn stationary_mean<G>(
    e: &MatrixEnsemble,
    burn_in: usize,
    samples: usize,
    seed: u64,
    chains: usize,
    g: G,
) -> Result<Estimate, McError>
where
    G: Fn(f64) -> f64 + Sync,
{
    e.validate()?;
    if chains < 2 || samples < chains {
        return Err(McError::InvalidBudget("need samples ≥ chains ≥ 2"));
    }
    let sums = run_chains(
        e,
        DEFAULT_X0,
        burn_in,
        samples,
        seed,
        chains,
        Execution::default(),
        || (0.0, 0usize),
        |(s, n), _, x| {
            *s += g(x[0] / x[1]);
            *n += 1;
        },
    );
    let means: Vec<f64> = sums.iter().map(|(s, n)| s / *n as f64).collect();
    Ok(mean_estimate(&means))
}

/// Lyapunov exponent per step as the stationary average of `ln|c z + d|`.
pub fn furstenberg_lyapunov(e: &MatrixEnsemble, samples: usize, seed: u64) -> Result<Estimate, McError> {
    e.validate()?;
    let chains = 16;
    if samples < chains {
        return Err(McError::InvalidBudget("need at least 16 samples"));
    }
    // The matrix is sampled independently of the current z.
    let per_chain = samples.div_ceil(chains);
    let means = map_replicas(Execution::default(), seed, chains, |_, rng| {
        let mut v = LogVector::new(DEFAULT_X0);
        for _ in 0..200 {
            step(e, &mut v, rng);
            v.renormalise();
        }
        let mut z = v.x;
        let mut acc = 0.0;
        for _ in 0..per_chain {
            let (m, _) = e.sample_matrix(rng);
            acc += cocycle_n(&m, z);
            z = normalise(m.apply(z));
        }
        acc / per_chain as f64
    });
    Ok(mean_estimate(&means))
}

#[inline]
fn normalise(x: [f64; 2]) -> [f64; 2] {
    let n = x[0].hypot(x[1]);
    [x[0] / n, x[1] / n]
}

/// `ln|c z + d|` for `z = u₀/u₁`, computed from the unit vector.
#[inline]
fn cocycle_n(m: &SlMatrix, u: [f64; 2]) -> f64 {
    (m.c * u[0] + m.d * u[1]).abs().ln() - u[1].abs().ln()
}

/// Moments of the jumps `Δξ_n = ln‖N(v_n/k) x‖ - ln‖x‖` of the log-amplitude
/// of a positive-energy Frisch–Lloyd chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementMoments {
    pub mean: Estimate,
    pub second_moment: Estimate,
}

pub fn phase_increments(
    e: &MatrixEnsemble,
    burn_in: usize,
    samples: usize,
    seed: u64,
) -> Result<IncrementMoments, McError> {
    e.validate()?;
    let chains = 16;
    if samples < chains {
        return Err(McError::InvalidBudget("need at least 16 samples"));
    }
    let per_chain = samples.div_ceil(chains);
    let stats = map_replicas(Execution::default(), seed, chains, |_, rng| {
        let mut v = LogVector::new(DEFAULT_X0);
        for _ in 0..burn_in {
            step(e, &mut v, rng);
            v.renormalise();
        }
        let mut x = v.x;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..per_chain {
            let p = e.sample_params(rng);
            let y = apply_an(p.w, p.u, x);
            let d = y[0].hypot(y[1]).ln();
            s1 += d;
            s2 += d * d;
            x = normalise(apply_k(e.variant, p.theta, y));
        }
        (s1 / per_chain as f64, s2 / per_chain as f64)
    });
    let m1: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let m2: Vec<f64> = stats.iter().map(|s| s.1).collect();
    Ok(IncrementMoments {
        mean: mean_estimate(&m1),
        second_moment: mean_estimate(&m2),
    })
}

/// Cumulants of `A = ∫₀^x z² dt` for `dz = -2κ z dt + √2 dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuReport {
    pub gamma1: Estimate,
    pub gamma2: Estimate,
    /// `(1/x) ln⟨e^{qA}⟩`.
    pub lambda_q: Estimate,
    pub q: f64,
}

/// Budget of the Ornstein–Uhlenbeck calibration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuConfig {
    pub kappa: f64,
    /// Length over which the cumulants of `A` are measured.
    pub horizon: f64,
    pub dt: f64,
    pub replicas: usize,
    pub q: f64,
    /// Shorter prefix used for `⟨e^{qA}⟩`, which degrades quickly with length
    /// as the weights become log-normal with variance `q²γ₂x`.
    pub moment_horizon: f64,
    pub seed: u64,
}

impl Default for OuConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            horizon: 50.0,
            dt: 2e-3,
            replicas: 4000,
            q: 0.5,
            moment_horizon: 10.0,
            seed: 1,
        }
    }
}

/// Euler–Maruyama simulation of `dz = -2κ z dt + √2 dW` started in its
/// stationary law, with `A = ∫ z² dt` as a left Riemann sum.
pub fn ou_selftest(cfg: &OuConfig) -> Result<OuReport, McError> {
    let OuConfig {
        kappa,
        horizon,
        dt,
        replicas,
        q,
        moment_horizon,
        seed,
    } = *cfg;
    if !(kappa > 0.0 && horizon > 0.0 && dt > 0.0 && dt * kappa < 0.1) {
        return Err(McError::InvalidBudget("need κ, x, dt > 0 with dt ≪ 1/κ"));
    }
    if !(moment_horizon > 0.0 && moment_horizon <= horizon) {
        return Err(McError::InvalidBudget("need 0 < moment horizon ≤ horizon"));
    }
    if replicas < 2 {
        return Err(McError::InvalidBudget("need at least two replicas"));
    }
    let steps = (horizon / dt).round() as usize;
    let steps_q = ((moment_horizon / dt).round() as usize).max(1);
    let x = steps as f64 * dt;
    let xq = steps_q as f64 * dt;
    let drift = 1.0 - 2.0 * kappa * dt;
    let noise = (2.0 * dt).sqrt();
    let a = map_replicas(Execution::default(), seed, replicas, |_, rng| {
        let mut z = rng.sample::<f64, _>(StandardNormal) / (2.0 * kappa).sqrt();
        let (mut acc, mut prefix) = (0.0, 0.0);
        for i in 0..steps {
            acc += z * z;
            if i + 1 == steps_q {
                prefix = acc * dt;
            }
            z = drift * z + noise * rng.sample::<f64, _>(StandardNormal);
        }
        (acc * dt, prefix)
    });
    let full: Vec<f64> = a.iter().map(|p| p.0).collect();
    let prefix: Vec<f64> = a.iter().map(|p| p.1).collect();
    let m = mean_estimate(&full);
    let v = variance_estimate(&full);
    let lq = log_moment(&prefix, q, xq)?;
    Ok(OuReport {
        gamma1: Estimate {
            value: m.value / x,
            se: m.se / x,
        },
        gamma2: Estimate {
            value: v.value / x,
            se: v.se / x,
        },
        lambda_q: lq.as_estimate(),
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_ensemble_is_exact() {
        let c = product_cumulants(&MatrixEnsemble::identity(), 50, 8, 1).unwrap();
        assert_eq!(c.mean_rate.value, 0.0);
        assert_eq!(c.var_rate.value, 0.0);
    }

    #[test]
    fn execution_modes_agree_bitwise() {
        let e = MatrixEnsemble::frisch_lloyd(1.0, 1.0, ParameterLaw::exponential(0.5)).unwrap();
        let mut o = McOptions {
            execution: Execution::Sequential,
            ..McOptions::default()
        };
        let a = product_cumulants_with(&e, 40, 64, 9, &o).unwrap();
        o.execution = Execution::Parallel;
        let b = product_cumulants_with(&e, 40, 64, 9, &o).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn q_zero_moment_vanishes() {
        let e = MatrixEnsemble::frisch_lloyd(1.0, 1.0, ParameterLaw::exponential(0.5)).unwrap();
        assert_eq!(gle_direct(&e, 10, 10, 0.0, 3).unwrap().value, 0.0);
    }

    #[test]
    fn collapse_is_reported() {
        let logs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert!(matches!(
            log_moment(&logs, 5.0, 1.0),
            Err(McError::EffectiveSampleCollapse { .. })
        ));
    }
}
