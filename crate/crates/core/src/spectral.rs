// SPDX-License-Identifier: Apache-2.0

//! Recessive solution of `-φ'' + [E - 𝓛(s)/(is)] φ = 0` and the spectral
//! quantities built from it.
//!
//! The solver integrates the logarithmic derivative `y = φ'/φ` backwards from
//! a WKB seed at `s_max`. Since `φ` is only needed through `f̂ = φ/φ(0)`,
//! carrying `y` and `ln φ` avoids overflow and keeps the weak-disorder
//! quantities (which are tiny differences from the free solution) accurate:
//! the state holds `η = y - y_ref` with `y_ref` the free value.
//!
//! The integrals entering γ₂ and λ₂ are carried as extra ODE components,
//! e.g. `R(s) = ∫_s^∞ (φ(t)/φ(s))² dt/t` obeys `R' = -2yR - 1/s`. Their log
//! singular parts are stopped at `s_cut`; the head `[0, s_cut]` is computed
//! from the Taylor series of `y`, which follows from that of the potential.

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::ensembles::{EnsembleError, LevyModel};
use crate::numerics::ode::{Integrator, OdeError, Tolerance};
use crate::numerics::quad::gauss_legendre_on;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("asymptotic seed unreliable at s_max = {s_max} (residual {residual:e})")]
    SeedUnreliable { s_max: f64, residual: f64 },
    #[error("no recessive solution in this picture: {0}")]
    NonDecaying(&'static str),
    #[error("integral did not converge: {0}")]
    QuadratureStall(String),
    #[error("small-s fit unstable (residual {residual:e})")]
    FitUnstable { residual: f64 },
    #[error("invalid energy {0} for this picture")]
    InvalidEnergy(f64),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Model(#[from] EnsembleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Picture {
    /// Fourier transform of the invariant density, `f̂(s)`.
    Fourier,
    /// Laplace transform `f̃(r) = f̂(-ir)`, used for E < 0 and positive weights.
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Initial truncation point; `None` selects `max(10/k, 10 v_rms, 20)`.
    pub s_max: Option<f64>,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    /// Convergence target for `y(0)` under doubling of `s_max`.
    pub tolerance: f64,
    /// `s_cut = cut_scale / scale` where scale is the largest natural wavenumber.
    pub cut_scale: f64,
    pub max_doublings: usize,
    pub head_nodes: usize,
    pub series_order: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            s_max: None,
            ode_rtol: 1e-11,
            ode_atol: 1e-15,
            tolerance: 1e-10,
            cut_scale: 1e-3,
            max_doublings: 6,
            head_nodes: 24,
            series_order: 40,
        }
    }
}

/// Integrals carried by the ODE and evaluated at `s_cut`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailIntegrals {
    /// `∫ e^{2 y_ref (t-s)} dt/t`.
    pub r0: C64,
    /// Remainder of `∫ (φ(t)/φ(s))² dt/t` beyond `r0`.
    pub r1: C64,
    /// `∫ (φ(t)/φ(s))² η(t) dt/t`.
    pub q_eta: C64,
    /// `∫ (φ(t)/φ(s))² p(t) dt/t` with p the weight transform.
    pub p: C64,
    /// `f̂(s_cut)²`.
    pub f2: C64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub seed_residual: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub doublings: usize,
    /// Change of `y(0)` in the last doubling.
    pub y0_change: f64,
    /// `|ln f̂(s_cut)|` mismatch between the ODE and the Taylor series.
    pub series_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSolution {
    pub energy: f64,
    pub picture: Picture,
    #[serde(skip)]
    pub model: LevyModel,
    /// Ascending grid on `[0, s_max]`.
    pub s: Vec<f64>,
    /// `ln f̂(s_j)`.
    pub log_fhat: Vec<C64>,
    /// `y(s_j) = φ'/φ`.
    pub dlog: Vec<C64>,
    /// `φ(0)` in the chosen normalisation (always 1).
    pub phi0: C64,
    /// `φ'(0⁺)`, equal to `f̂'(0⁺)`.
    pub dphi0: C64,
    /// `-2 Re[φ(0) φ'(0)*]`.
    pub wronskian: f64,
    pub s_max: f64,
    pub s_cut: f64,
    pub y_ref: C64,
    /// Taylor coefficients of `y` at 0.
    pub y_taylor: Vec<C64>,
    pub tail: TailIntegrals,
    /// `∫₀^∞ (1 - p(s))/s f̂(s)² ds`, zero if the model has no weights.
    pub d0: C64,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralReport {
    pub gamma1: f64,
    pub idos: f64,
    /// Per-step λ₂, when the model has a weight law.
    pub lambda2: Option<f64>,
    pub gamma2: f64,
    pub diagnostics: SolveDiagnostics,
}

struct Physics {
    model: LevyModel,
    picture: Picture,
    y_ref: C64,
    has_weights: bool,
    rho: f64,
}

impl Physics {
    /// `V(s) - y_ref²`.
    fn dv(&self, s: f64) -> C64 {
        match self.picture {
            Picture::Fourier => -self.model.levy_over_is(s),
            Picture::Laplace => C64::new(self.model.laplace_potential(s).unwrap_or(f64::NAN), 0.0),
        }
    }

    fn v(&self, s: f64) -> C64 {
        self.y_ref * self.y_ref + self.dv(s)
    }

    /// `(1 - p(s))/s`, regular at 0.
    fn w_regular(&self, s: f64) -> C64 {
        if !self.has_weights {
            return C64::new(0.0, 0.0);
        }
        match self.picture {
            Picture::Fourier => C64::i() * self.model.levy_over_is(s) / self.rho,
            Picture::Laplace => C64::new(self.model.laplace_potential(s).unwrap_or(f64::NAN) / self.rho, 0.0),
        }
    }

    fn dv_taylor(&self, order: usize) -> Vec<C64> {
        match self.picture {
            Picture::Fourier => self.model.levy_over_is_taylor(order).into_iter().map(|c| -c).collect(),
            Picture::Laplace => self
                .model
                .laplace_potential_taylor(order)
                .into_iter()
                .map(|c| C64::new(c, 0.0))
                .collect(),
        }
    }

    fn seed(&self, s: f64) -> C64 {
        let v = self.v(s);
        let h = 1e-5 * s.max(1.0);
        let dv = (self.v(s + h) - self.v(s - h)) / (2.0 * h);
        -v.sqrt() - dv / (4.0 * v)
    }
}

fn natural_scale(model: &LevyModel, energy: f64) -> f64 {
    let k = energy.abs().sqrt();
    match *model {
        LevyModel::CompoundPoisson { .. } => k.max(model.weight_scale()).max(1e-300),
        LevyModel::GaussianWhiteNoise { sigma } => k.max(sigma.abs().cbrt()).max(1e-300),
    }
}

fn default_s_max(model: &LevyModel, energy: f64) -> f64 {
    let k = match *model {
        LevyModel::GaussianWhiteNoise { sigma } => energy.abs().sqrt().max(sigma.abs().cbrt()),
        _ => energy.abs().sqrt(),
    };
    let v = match *model {
        LevyModel::CompoundPoisson { weights, .. } => weights.mean().abs().max(weights.variance().sqrt()),
        _ => 0.0,
    };
    (10.0 / k).max(10.0 * v).max(20.0)
}

const N_STATE: usize = 7;
const ETA: usize = 0;
const G_ETA: usize = 1;
const R0: usize = 2;
const R1: usize = 3;
const Q_ETA: usize = 4;
const P_W: usize = 5;
const D_W: usize = 6;

fn rhs(ph: &Physics, s: f64, st: &[C64; N_STATE], singular: bool) -> [C64; N_STATE] {
    let zero = C64::new(0.0, 0.0);
    let eta = st[ETA];
    let y = ph.y_ref + eta;
    let m2y = -2.0 * y;
    let mut d = [zero; N_STATE];
    d[ETA] = ph.dv(s) - 2.0 * ph.y_ref * eta - eta * eta;
    d[G_ETA] = eta;
    let w = ph.w_regular(s);
    d[D_W] = m2y * st[D_W] - w;
    if singular {
        let inv = 1.0 / s;
        d[R0] = -2.0 * ph.y_ref * st[R0] - inv;
        d[R1] = m2y * st[R1] - 2.0 * eta * st[R0];
        d[Q_ETA] = m2y * st[Q_ETA] - eta * inv;
        if ph.has_weights {
            // p(s)/s = 1/s - (1 - p(s))/s
            d[P_W] = m2y * st[P_W] - (inv - w);
        }
    }
    d
}

struct RawSolve {
    s: Vec<f64>,
    g: Vec<C64>,
    y: Vec<C64>,
    y0: C64,
    tail: TailIntegrals,
    d0: C64,
    seed_residual: f64,
    accepted: usize,
    rejected: usize,
}

fn integrate_once(ph: &Physics, s_max: f64, s_cut: f64, opts: &SpectralOptions) -> Result<RawSolve, SpectralError> {
    let zero = C64::new(0.0, 0.0);
    let y_seed = ph.seed(s_max);
    let seed_residual = {
        let h = 1e-4 * s_max;
        let dy = (ph.seed(s_max + h) - ph.seed(s_max - h)) / (2.0 * h);
        let v = ph.v(s_max);
        (dy - v + y_seed * y_seed).norm() / v.norm()
    };
    if y_seed.re >= 0.0 || y_seed.re.abs() < 1e-8 * y_seed.norm() {
        return Err(SpectralError::NonDecaying("seed does not decay at s_max"));
    }
    let mut st = [zero; N_STATE];
    st[ETA] = y_seed - ph.y_ref;

    let tol = Tolerance::new(opts.ode_rtol, opts.ode_atol);
    let scale = 1.0 / y_seed.norm().max(1e-300);
    let mut pts: Vec<(f64, C64, C64)> = vec![(s_max, st[G_ETA], st[ETA])];
    let integ = Integrator::new(tol)
        .with_h_init(1e-2 * scale.min(s_max))
        .with_h_max(s_max / 400.0);
    let ((st1, _), stats1) = integ.run(
        |s, x| rhs(ph, s, x, true),
        s_max,
        s_cut,
        st,
        |s, x, _| pts.push((s, x[G_ETA], x[ETA])),
    )?;
    let integ0 = Integrator::new(tol).with_h_init(s_cut / 16.0).with_h_max(s_cut / 16.0);
    let mut st_in = st1;
    for i in [R0, R1, Q_ETA, P_W] {
        st_in[i] = zero;
    }
    let ((st0, _), stats0) = integ0.run(
        |s, x| rhs(ph, s, x, false),
        s_cut,
        0.0,
        st_in,
        |s, x, _| pts.push((s, x[G_ETA], x[ETA])),
    )?;

    let g0 = st0[G_ETA];
    pts.reverse();
    let s: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let g: Vec<C64> = pts.iter().map(|p| ph.y_ref * p.0 + p.1 - g0).collect();
    let y: Vec<C64> = pts.iter().map(|p| ph.y_ref + p.2).collect();
    let log_f_cut = ph.y_ref * s_cut + st1[G_ETA] - g0;
    let tail = TailIntegrals {
        r0: st1[R0],
        r1: st1[R1],
        q_eta: st1[Q_ETA],
        p: st1[P_W],
        f2: (2.0 * log_f_cut).exp(),
    };
    Ok(RawSolve {
        s,
        g,
        y,
        y0: ph.y_ref + st0[ETA],
        tail,
        d0: st0[D_W],
        seed_residual,
        accepted: stats1.accepted + stats0.accepted,
        rejected: stats1.rejected + stats0.rejected,
    })
}

/// Taylor coefficients of `y` from `y(0)` and those of the potential, via
/// `(n+1) y_{n+1} = V_n - Σ y_i y_{n-i}`.
fn riccati_series(ph: &Physics, y0: C64, order: usize) -> Vec<C64> {
    let mut v = ph.dv_taylor(order);
    v[0] += ph.y_ref * ph.y_ref;
    let mut y = vec![C64::new(0.0, 0.0); order + 1];
    y[0] = y0;
    for n in 0..order {
        let conv: C64 = (0..=n).map(|i| y[i] * y[n - i]).sum();
        y[n + 1] = (v[n] - conv) / (n + 1) as f64;
    }
    y
}

fn series_log_f(y: &[C64], s: f64) -> C64 {
    // ∫₀^s y = Σ y_n s^{n+1}/(n+1), by Horner.
    let mut acc = C64::new(0.0, 0.0);
    for (n, c) in y.iter().enumerate().rev() {
        acc = acc * s + c / (n + 1) as f64;
    }
    acc * s
}

/// `Σ_{n≥1} y_n s^{n-1}`.
fn series_dy_over_s(y: &[C64], s: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for c in y.iter().skip(1).rev() {
        acc = acc * s + c;
    }
    acc
}

fn solve_in_picture(
    model: &LevyModel,
    energy: f64,
    picture: Picture,
    opts: &SpectralOptions,
) -> Result<SpectralSolution, SpectralError> {
    let (has_weights, rho) = match *model {
        LevyModel::CompoundPoisson { rho, weights } => {
            weights.validate()?;
            (true, rho)
        }
        LevyModel::GaussianWhiteNoise { .. } => (false, 1.0),
    };
    let y_ref = match picture {
        Picture::Fourier => -C64::new(energy, 0.0).sqrt(),
        Picture::Laplace => C64::new(-(-energy).sqrt(), 0.0),
    };
    let ph = Physics {
        model: *model,
        picture,
        y_ref,
        has_weights,
        rho,
    };
    let s_cut = opts.cut_scale / natural_scale(model, energy);
    let mut s_max = opts.s_max.unwrap_or_else(|| default_s_max(model, energy));
    let mut raw = integrate_once(&ph, s_max, s_cut, opts)?;
    let mut change = f64::INFINITY;
    let mut doublings = 0;
    while doublings < opts.max_doublings {
        let next = integrate_once(&ph, 2.0 * s_max, s_cut, opts)?;
        change = (next.y0 - raw.y0).norm();
        s_max *= 2.0;
        raw = next;
        doublings += 1;
        if change <= opts.tolerance * (1.0 + raw.y0.norm()) {
            break;
        }
    }
    if change > opts.tolerance * (1.0 + raw.y0.norm()) {
        return Err(SpectralError::SeedUnreliable {
            s_max,
            residual: change,
        });
    }

    let y_taylor = riccati_series(&ph, raw.y0, opts.series_order);
    let last = y_taylor
        .last()
        .map(|c| c.norm() * s_cut.powi(opts.series_order as i32))
        .unwrap_or(0.0);
    if !(last <= 1e-14 * (1.0 + raw.y0.norm())) {
        return Err(SpectralError::QuadratureStall(format!(
            "Taylor series of y not converged at s_cut = {s_cut:e}"
        )));
    }
    let series_mismatch = (series_log_f(&y_taylor, s_cut) - 0.5 * raw.tail.f2.ln()).norm();

    Ok(SpectralSolution {
        energy,
        picture,
        model: *model,
        s: raw.s,
        log_fhat: raw.g,
        dlog: raw.y,
        phi0: C64::new(1.0, 0.0),
        dphi0: raw.y0,
        wronskian: -2.0 * raw.y0.re,
        s_max,
        s_cut,
        y_ref,
        y_taylor,
        tail: raw.tail,
        d0: raw.d0,
        diagnostics: SolveDiagnostics {
            seed_residual: raw.seed_residual,
            accepted_steps: raw.accepted,
            rejected_steps: raw.rejected,
            doublings,
            y0_change: change,
            series_mismatch,
        },
    })
}

/// Recessive solution in the Fourier picture.
///
/// Compound Poisson models require E > 0: for E < 0 the recessive solution
/// oscillates at infinity and the Laplace picture must be used.
pub fn solve_recessive(
    model: &LevyModel,
    energy: f64,
    opts: &SpectralOptions,
) -> Result<SpectralSolution, SpectralError> {
    if let LevyModel::CompoundPoisson { .. } = model {
        if energy <= 0.0 {
            return Err(SpectralError::NonDecaying(
                "compound Poisson at E <= 0 oscillates at infinity; use the Laplace picture",
            ));
        }
    }
    solve_in_picture(model, energy, Picture::Fourier, opts)
}

/// Recessive solution of `f̃'' = [k² + ρ(1 - p̃(r))/r] f̃` for E = -k² < 0 and
/// non-negative weights.
pub fn solve_recessive_laplace(
    model: &LevyModel,
    energy: f64,
    opts: &SpectralOptions,
) -> Result<SpectralSolution, SpectralError> {
    if energy >= 0.0 {
        return Err(SpectralError::InvalidEnergy(energy));
    }
    if !model.has_nonnegative_weights() {
        return Err(SpectralError::Model(EnsembleError::UnsupportedLaw(
            "the Laplace picture needs non-negative weights",
        )));
    }
    solve_in_picture(model, energy, Picture::Laplace, opts)
}

/// Solution in the picture appropriate for the sign of the energy.
pub fn solve_auto(model: &LevyModel, energy: f64, opts: &SpectralOptions) -> Result<SpectralSolution, SpectralError> {
    match model {
        LevyModel::CompoundPoisson { .. } if energy < 0.0 => solve_recessive_laplace(model, energy, opts),
        _ => solve_recessive(model, energy, opts),
    }
}

impl SpectralSolution {
    /// `f̂(s)` (Fourier) or `f̃(s)` (Laplace) by Hermite interpolation of
    /// `ln f̂`; negative arguments use `f̂(-s) = f̂(s)*` in the Fourier picture.
    pub fn fhat(&self, s: f64) -> C64 {
        if s < 0.0 && self.picture == Picture::Fourier {
            return self.fhat(-s).conj();
        }
        self.log_fhat_at(s.abs()).exp()
    }

    pub fn log_fhat_at(&self, s: f64) -> C64 {
        if s <= self.s[0] {
            return C64::new(0.0, 0.0);
        }
        let n = self.s.len();
        if s >= self.s[n - 1] {
            return self.log_fhat[n - 1] + self.dlog[n - 1] * (s - self.s[n - 1]);
        }
        let j = self.s.partition_point(|&t| t <= s).max(1) - 1;
        let (a, b) = (self.s[j], self.s[j + 1]);
        let h = b - a;
        let t = (s - a) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        self.log_fhat[j] * h00 + self.dlog[j] * (h10 * h) + self.log_fhat[j + 1] * h01 + self.dlog[j + 1] * (h11 * h)
    }

    /// `φ(s_j)` on the grid, normalised by `φ(0) = 1`.
    pub fn phi(&self) -> Vec<C64> {
        self.log_fhat.iter().map(|g| g.exp()).collect()
    }

    fn rho(&self) -> Option<f64> {
        match self.model {
            LevyModel::CompoundPoisson { rho, .. } => Some(rho),
            LevyModel::GaussianWhiteNoise { .. } => None,
        }
    }

    fn head<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        gauss_legendre_on(48.min(2 * self.y_taylor.len()).max(16), 0.0, self.s_cut)
            .into_iter()
            .map(|(x, w)| w * f(x))
            .sum()
    }

    fn gamma2_fourier(&self) -> f64 {
        let y0 = self.dphi0;
        let g1 = -y0.im;
        let y = &self.y_taylor;
        let head = self.head(|s| {
            let l = 2.0 * series_log_f(y, s);
            let f2 = l.exp();
            // Re[(2γ₁ - 2i y(s)) f̂²]/s with the O(1) part 2γ₁ - 2i y(0) = -2i Re y(0).
            let im_over_s = l.re.exp() * l.im.sin() / s;
            let a0 = 2.0 * y0.re * im_over_s;
            let a1 = (-2.0 * C64::i() * series_dy_over_s(y, s) * f2).re;
            a0 + a1
        });
        let t = &self.tail;
        let r = t.r0 + t.r1;
        let tail = (t.f2 * ((2.0 * g1 - 2.0 * C64::i() * self.y_ref) * r - 2.0 * C64::i() * t.q_eta)).re;
        head + tail
    }

    fn gamma2_laplace_value(&self) -> f64 {
        let y = &self.y_taylor;
        let head = self.head(|r| {
            let l = 2.0 * series_log_f(y, r);
            2.0 * (series_dy_over_s(y, r) * l.exp()).re
        });
        let t = &self.tail;
        let eta0 = self.dphi0 - self.y_ref;
        let tail = -2.0 * (t.f2 * (eta0 * (t.r0 + t.r1) - t.q_eta)).re;
        head + tail
    }

    fn rho_lambda2_laplace(&self) -> Option<f64> {
        let rho = self.rho()?;
        let y = &self.y_taylor;
        let eta0 = (self.dphi0 - self.y_ref).re;
        let model = self.model;
        // ∫₀^{cut} (η0 p̃ - η) f̃²/r with η0 p̃ - η = -η0 (1 - p̃) - (η - η0).
        let head = self.head(|r| {
            let l = 2.0 * series_log_f(y, r);
            let one_minus_p_over_r = model.laplace_potential(r).unwrap_or(f64::NAN) / rho;
            ((-eta0 * one_minus_p_over_r - series_dy_over_s(y, r)) * l.exp()).re
        });
        let t = &self.tail;
        let tail = (t.f2 * (eta0 * t.p - t.q_eta)).re;
        Some(2.0 * (-(self.y_ref * self.d0).re + head + tail))
    }
}

/// Lyapunov exponent per unit length, `γ₁ = ρλ₁`.
pub fn gamma1(sol: &SpectralSolution) -> f64 {
    match sol.picture {
        Picture::Fourier => -sol.dphi0.im,
        Picture::Laplace => -sol.dphi0.re,
    }
}

/// Integrated density of states per unit length.
pub fn idos(sol: &SpectralSolution) -> f64 {
    match sol.picture {
        Picture::Fourier => -sol.dphi0.re / std::f64::consts::PI,
        Picture::Laplace => 0.0,
    }
}

/// Per-step λ₂ in the Fourier picture, from
/// `ρλ₂ = -γ₂ + 2γ₁ Re ∫₀^∞ (1 - p̂)/s f̂² ds`.
pub fn lambda2(sol: &SpectralSolution) -> Result<f64, SpectralError> {
    if sol.picture != Picture::Fourier {
        return lambda2_laplace(sol);
    }
    let rho = sol.rho().ok_or(SpectralError::Model(EnsembleError::UnsupportedLaw(
        "λ₂ needs a weight law",
    )))?;
    let rl2 = -sol.gamma2_fourier() + 2.0 * gamma1(sol) * sol.d0.re;
    finite(rl2 / rho, "lambda2")
}

/// Per-step λ₂ from the Laplace picture.
pub fn lambda2_laplace(sol: &SpectralSolution) -> Result<f64, SpectralError> {
    if sol.picture != Picture::Laplace {
        return Err(SpectralError::InvalidEnergy(sol.energy));
    }
    let rho = sol.rho().ok_or(SpectralError::Model(EnsembleError::UnsupportedLaw(
        "λ₂ needs a weight law",
    )))?;
    let rl2 = sol.rho_lambda2_laplace().unwrap_or(f64::NAN);
    finite(rl2 / rho, "lambda2_laplace")
}

/// Per-length variance rate γ₂ of `ln|ψ(x)|` in the Fourier picture.
pub fn gamma2(sol: &SpectralSolution) -> Result<f64, SpectralError> {
    match sol.picture {
        Picture::Fourier => finite(sol.gamma2_fourier(), "gamma2"),
        Picture::Laplace => gamma2_laplace(sol),
    }
}

/// γ₂ from the Laplace picture.
pub fn gamma2_laplace(sol: &SpectralSolution) -> Result<f64, SpectralError> {
    if sol.picture != Picture::Laplace {
        return Err(SpectralError::InvalidEnergy(sol.energy));
    }
    finite(sol.gamma2_laplace_value(), "gamma2_laplace")
}

fn finite(v: f64, what: &str) -> Result<f64, SpectralError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SpectralError::QuadratureStall(format!("{what} is not finite")))
    }
}

/// Per-step variance `Λ̃''(0) = λ₁² - λ₂`.
pub fn step_variance(sol: &SpectralSolution) -> Result<f64, SpectralError> {
    let rho = sol.rho().ok_or(SpectralError::Model(EnsembleError::UnsupportedLaw(
        "per-step quantities need a weight law",
    )))?;
    let l1 = gamma1(sol) / rho;
    Ok(l1 * l1 - lambda2(sol)?)
}

/// All spectral quantities at one energy, picking the picture from the sign
/// of E.
pub fn report(model: &LevyModel, energy: f64, opts: &SpectralOptions) -> Result<SpectralReport, SpectralError> {
    let sol = solve_auto(model, energy, opts)?;
    let lambda2 = match model {
        LevyModel::CompoundPoisson { .. } => Some(lambda2(&sol)?),
        LevyModel::GaussianWhiteNoise { .. } => None,
    };
    Ok(SpectralReport {
        gamma1: gamma1(&sol),
        idos: idos(&sol),
        lambda2,
        gamma2: gamma2(&sol)?,
        diagnostics: sol.diagnostics,
    })
}

/// Fits `f̂(s) ≈ 1 + a s + b s²` on `(0, s_cut]` and returns
/// `(𝒩, γ₁) = (-Re a / π, -Im a)`.
pub fn fhat_small_s_check(sol: &SpectralSolution) -> Result<(f64, f64), SpectralError> {
    if sol.picture != Picture::Fourier {
        return Err(SpectralError::InvalidEnergy(sol.energy));
    }
    let h = sol.s_cut;
    let pts: Vec<(f64, C64)> = (1..=12)
        .map(|j| {
            let s = h * j as f64 / 12.0;
            (s / h, sol.fhat(s) - 1.0)
        })
        .collect();
    // Least squares for (f - 1)/1 = a t + b t², t = s/h.
    let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
    let (mut b1, mut b2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for &(t, v) in &pts {
        s11 += t * t;
        s12 += t * t * t;
        s22 += t * t * t * t;
        b1 += v * t;
        b2 += v * t * t;
    }
    let det = s11 * s22 - s12 * s12;
    let a = (b1 * s22 - b2 * s12) / det;
    let b = (b2 * s11 - b1 * s12) / det;
    let residual = pts
        .iter()
        .map(|&(t, v)| (v - a * t - b * t * t).norm())
        .fold(0.0, f64::max);
    let scale = a.norm().max(1e-300);
    if residual > 1e-3 * scale {
        return Err(SpectralError::FitUnstable { residual });
    }
    let slope = a / h;
    Ok((-slope.re / std::f64::consts::PI, -slope.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::ParameterLaw;

    #[test]
    fn free_fourier_solution() {
        let m = LevyModel::free();
        let sol = solve_recessive(&m, 4.0, &SpectralOptions::default()).unwrap();
        assert!(gamma1(&sol).abs() < 1e-12);
        assert!((idos(&sol) - 2.0 / std::f64::consts::PI).abs() < 1e-12);
        for &s in &[0.1, 0.5, 2.0] {
            assert!((sol.fhat(s) - (-2.0 * s).exp()).norm() < 1e-10);
        }
        assert!(gamma2(&sol).unwrap().abs() < 1e-10);
    }

    #[test]
    fn free_laplace_solution() {
        let m = LevyModel::free();
        let sol = solve_recessive_laplace(&m, -9.0, &SpectralOptions::default()).unwrap();
        assert!((gamma1(&sol) - 3.0).abs() < 1e-12);
        assert!(lambda2_laplace(&sol).unwrap().abs() < 1e-10);
        assert!(gamma2_laplace(&sol).unwrap().abs() < 1e-10);
        assert_eq!(idos(&sol), 0.0);
    }

    #[test]
    fn compound_poisson_rejects_negative_energy_in_fourier() {
        let m = LevyModel::compound_poisson(1.0, ParameterLaw::exponential(0.01));
        assert!(matches!(
            solve_recessive(&m, -4.0, &SpectralOptions::default()),
            Err(SpectralError::NonDecaying(_))
        ));
    }

    #[test]
    fn laplace_needs_positive_weights() {
        let m = LevyModel::compound_poisson(1.0, ParameterLaw::gaussian(0.0, 1.0));
        assert!(solve_recessive_laplace(&m, -4.0, &SpectralOptions::default()).is_err());
    }
}
