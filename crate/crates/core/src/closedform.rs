// SPDX-License-Identifier: Apache-2.0

//! Closed-form and asymptotic results: subgroup GLEs, the continuum
//! operator, high- and low-energy asymptotics of the Halperin and
//! Frisch–Lloyd models, the uniform-phase approximation and SPS diagnostics.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensembles::{EnsembleError, ParameterLaw};
use crate::numerics::quad::{integrate_gk, integrate_tanh_sinh};
use crate::sl2core::{dh_tabulated, h_tabulated, JacobianKind, Subgroup, Variant};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("the drift of w vanishes")]
    ZeroDrift,
    #[error("q = {q} is beyond the radius of convergence {radius}")]
    BeyondRadius { q: f64, radius: f64 },
    #[error("the density is not normalisable for mean w = {wbar}")]
    NotNormalizable { wbar: f64 },
    #[error("covariance is not positive semi-definite")]
    InvalidCovariance,
    #[error(transparent)]
    Law(#[from] EnsembleError),
}

/// Means and covariance of `(θ, w, u)` for the continuum limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumSpec {
    pub mu: [f64; 3],
    pub cov: [[f64; 3]; 3],
    pub variant: Variant,
    pub jacobian: JacobianKind,
}

impl ContinuumSpec {
    pub fn validate(&self) -> Result<(), ClosedFormError> {
        let c = &self.cov;
        let tol = 1e-14 * (1.0 + c.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())));
        for i in 0..3 {
            for j in 0..3 {
                if (c[i][j] - c[j][i]).abs() > tol {
                    return Err(ClosedFormError::InvalidCovariance);
                }
            }
        }
        // Positive semi-definite iff every principal minor is non-negative.
        let m2 = |i: usize, j: usize| c[i][i] * c[j][j] - c[i][j] * c[j][i];
        let det = c[0][0] * m2(1, 2) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
            + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
        let ok =
            (0..3).all(|i| c[i][i] >= -tol) && m2(0, 1) >= -tol && m2(0, 2) >= -tol && m2(1, 2) >= -tol && det >= -tol;
        if ok {
            Ok(())
        } else {
            Err(ClosedFormError::InvalidCovariance)
        }
    }

    fn subgroups(&self) -> [Subgroup; 3] {
        let k = match self.variant {
            Variant::Compact => Subgroup::K,
            Variant::Hyperbolic => Subgroup::Ktilde,
        };
        [k, Subgroup::A, Subgroup::N]
    }

    /// `c = (σ²₂₃, -σ²₁₃, σ²₁₂)`.
    pub fn c_vector(&self) -> [f64; 3] {
        [self.cov[1][2], -self.cov[0][2], self.cov[0][1]]
    }
}

/// Coefficients `(p2, p1, p0)` of a second-order operator.
type Op2 = [f64; 3];

/// `D_i = d/dz ∘ g_i + q h_i` as `g_i Φ' + b_i Φ`, returned with the
/// derivatives needed to compose it: `(g, g', b, b')`.
fn first_order(spec: &ContinuumSpec, i: usize, q: f64, z: f64) -> (f64, f64, f64, f64) {
    let s = spec.subgroups()[i];
    let (g, dg, d2g) = (s.g(z), s.dg(z), s.d2g());
    let (h, dh) = (h_tabulated(spec.jacobian, s, z), dh_tabulated(spec.jacobian, s, z));
    (g, dg, dg + q * h, d2g + q * dh)
}

/// `D_i D_j` as an operator on Φ.
fn compose(di: (f64, f64, f64, f64), dj: (f64, f64, f64, f64)) -> Op2 {
    let (gi, _, bi, _) = di;
    let (gj, dgj, bj, dbj) = dj;
    [gi * gj, gi * (dgj + bj) + bi * gj, gi * dbj + bi * bj]
}

/// Coefficients `(a2, a1, a0)` of the continuum operator at `z`, such that
/// `a2 Φ'' + a1 Φ' + a0 Φ = Λ̃(q) Φ` with
/// `½ D·σ²·D + ½ c·(D × D) + μ·D` and `D_i = d/dz ∘ g_i + q h_i`.
pub fn continuum_coefficients(spec: &ContinuumSpec, q: f64, z: f64) -> (f64, f64, f64) {
    let d: Vec<_> = (0..3).map(|i| first_order(spec, i, q, z)).collect();
    let mut op = [0.0; 3];
    let add = |op: &mut Op2, w: f64, t: Op2| {
        for (o, x) in op.iter_mut().zip(t) {
            *o += w * x;
        }
    };
    for i in 0..3 {
        for j in 0..3 {
            if spec.cov[i][j] != 0.0 {
                add(&mut op, 0.5 * spec.cov[i][j], compose(d[i], d[j]));
            }
        }
    }
    let c = spec.c_vector();
    for (k, (i, j)) in [(1usize, 2usize), (2, 0), (0, 1)].into_iter().enumerate() {
        if c[k] != 0.0 {
            add(&mut op, 0.5 * c[k], compose(d[i], d[j]));
            add(&mut op, -0.5 * c[k], compose(d[j], d[i]));
        }
    }
    for i in 0..3 {
        let (g, _, b, _) = d[i];
        add(&mut op, spec.mu[i], [0.0, g, b]);
    }
    (op[0], op[1], op[2])
}

/// Continuum AN spec with `D_uu = 4 D_ww = 1`, `D_wu = 0`, `ū = 0` and `J_N`.
pub fn an_simple_spec(wbar: f64) -> ContinuumSpec {
    ContinuumSpec {
        mu: [0.0, wbar, 0.0],
        cov: [[0.0; 3], [0.0, 0.25, 0.0], [0.0, 0.0, 1.0]],
        variant: Variant::Compact,
        jacobian: JacobianKind::N,
    }
}

/// Exact eigenpair of [`an_simple_spec`]: `Φ = (1+z²)^{-1/2+2w̄-q/2}` with
/// `Λ̃(q) = -q w̄ + q²/8`. Returns `(Φ, Φ', Φ'', Λ̃)`.
pub fn an_exact_eigenpair(wbar: f64, q: f64, z: f64) -> (f64, f64, f64, f64) {
    let alpha = -0.5 + 2.0 * wbar - 0.5 * q;
    let p = 1.0 + z * z;
    let phi = p.powf(alpha);
    let dphi = 2.0 * alpha * z * p.powf(alpha - 1.0);
    let d2phi = 2.0 * alpha * p.powf(alpha - 1.0) + 4.0 * alpha * (alpha - 1.0) * z * z * p.powf(alpha - 2.0);
    (phi, dphi, d2phi, -q * wbar + q * q / 8.0)
}

/// Relative residual `|(L - Λ)Φ| / (|a2Φ''| + |a1Φ'| + |a0Φ| + |ΛΦ|)`.
pub fn eigen_residual(spec: &ContinuumSpec, q: f64, z: f64, phi: (f64, f64, f64), lambda: f64) -> f64 {
    let (a2, a1, a0) = continuum_coefficients(spec, q, z);
    let (f, df, d2f) = phi;
    let terms = [a2 * d2f, a1 * df, a0 * f, -lambda * f];
    terms.iter().sum::<f64>().abs() / terms.iter().map(|t| t.abs()).sum::<f64>()
}

/// `Λ̃(q) = ln⟨e^{±qw}⟩` for products `A(w)N(u)`, with `± = sign(w̄)`: the
/// log-norm grows like `|Σw|`.
pub fn an_gle(w_law: &ParameterLaw, q: f64) -> Result<f64, ClosedFormError> {
    w_law.validate()?;
    let wbar = w_law.mean();
    if wbar == 0.0 {
        return Err(ClosedFormError::ZeroDrift);
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    if let ParameterLaw::Gaussian { mean, variance } = *w_law {
        return Ok(q * mean.abs() + 0.5 * q * q * variance);
    }
    Ok(w_law.mgf(q * wbar.signum())?.ln())
}

/// `Λ̃(q) = -ln(1 - qk/ρ)` for the free hyperbolic products `K̃(kℓ)`.
pub fn ktilde_gle(k: f64, rho: f64, q: f64) -> Result<f64, ClosedFormError> {
    let radius = rho / k;
    if q >= radius {
        return Err(ClosedFormError::BeyondRadius { q, radius });
    }
    Ok(-(-q * k / rho).ln_1p())
}

/// Stationary density `(1+z²)^{-1/2+2w̄} e^{2ū arctan z}` of the continuum AN
/// chain in the units `D_uu = 4 D_ww = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnDensity {
    pub wbar: f64,
    pub ubar: f64,
    /// Normalisation constant 𝒜₀.
    pub norm: f64,
}

impl AnDensity {
    pub fn new(wbar: f64, ubar: f64) -> Result<Self, ClosedFormError> {
        if !(wbar < 0.0) {
            return Err(ClosedFormError::NotNormalizable { wbar });
        }
        let mut d = Self { wbar, ubar, norm: 1.0 };
        d.norm = 1.0 / d.unnormalised_mass(FRAC_PI_2);
        Ok(d)
    }

    /// Density in `t = arctan z`, `(cos t)^{-1-4w̄} e^{2ūt}` up to 𝒜₀.
    fn angle_density(&self, t: f64) -> f64 {
        t.cos().powf(-1.0 - 4.0 * self.wbar) * (2.0 * self.ubar * t).exp()
    }

    fn unnormalised_mass(&self, t: f64) -> f64 {
        if t <= -FRAC_PI_2 {
            return 0.0;
        }
        integrate_tanh_sinh(|s| self.angle_density(s), -FRAC_PI_2, t.min(FRAC_PI_2), 1e-13).value
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.norm * (1.0 + z * z).powf(-0.5 + 2.0 * self.wbar) * (2.0 * self.ubar * z.atan()).exp()
    }

    /// CDF in the compactified coordinate `t = arctan z`.
    pub fn cdf_angle(&self, t: f64) -> f64 {
        (self.norm * self.unnormalised_mass(t)).clamp(0.0, 1.0)
    }
}

pub fn an_invariant_density(wbar: f64, ubar: f64, z: f64) -> Result<f64, ClosedFormError> {
    Ok(AnDensity::new(wbar, ubar)?.pdf(z))
}

/// An asymptotic pair `(γ₁, γ₂)` with a note when the inputs fall outside
/// the regime where it applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asymptotic {
    pub gamma1: f64,
    pub gamma2: f64,
    pub warning: Option<String>,
}

/// Halperin model at `|E| ≫ σ^{2/3}`.
pub fn halperin_asymptotic(energy: f64, sigma: f64) -> Asymptotic {
    let (gamma1, gamma2) = if energy > 0.0 {
        (sigma / (8.0 * energy), sigma / (8.0 * energy))
    } else {
        ((-energy).sqrt() + sigma / (8.0 * energy), sigma / (4.0 * -energy))
    };
    let scale = sigma.powf(2.0 / 3.0);
    let warning =
        (energy.abs() < 3.0 * scale).then(|| format!("|E| = {} is below 3σ^(2/3) = {}", energy.abs(), 3.0 * scale));
    Asymptotic {
        gamma1,
        gamma2,
        warning,
    }
}

/// Frisch–Lloyd model at high energy: `γ₁ = γ₂ = ρ⟨v²⟩/(8E)`.
pub fn weak_disorder_fl(energy: f64, rho: f64, m2: f64) -> (f64, f64) {
    let g = rho * m2 / (8.0 * energy);
    (g, g)
}

/// Frisch–Lloyd model with exponential weights of mean `v̄` for `ρ ≪ k ≪ v̄`.
pub fn concentrated_regime(rho: f64, vbar: f64, k: f64) -> Asymptotic {
    let l = (vbar * (-EULER_GAMMA).exp() / (2.0 * k)).ln();
    let warning = (!(rho < k && k < vbar)).then(|| format!("need ρ ≪ k ≪ v̄, got ρ = {rho}, k = {k}, v̄ = {vbar}"));
    Asymptotic {
        gamma1: rho * l,
        gamma2: rho * PI * PI / 4.0 + rho * l * l,
        warning,
    }
}

/// `⟨f(v)⟩` over a weight law.
pub fn law_expectation<F: Fn(f64) -> f64>(law: &ParameterLaw, f: F) -> f64 {
    match *law {
        ParameterLaw::Dirac { value } => f(value),
        ParameterLaw::TwoPoint { v1, p1, v2 } => p1 * f(v1) + (1.0 - p1) * f(v2),
        ParameterLaw::Exponential { mean } => [(0.0, 1.0), (1.0, 6.0), (6.0, 45.0)]
            .iter()
            .map(|&(a, b)| integrate_gk(|x| (-x).exp() * f(mean * x), a, b, 1e-14, 1e-12).value)
            .sum(),
        ParameterLaw::Gaussian { mean, variance } => {
            let sd = variance.sqrt();
            if sd == 0.0 {
                return f(mean);
            }
            let norm = 1.0 / (2.0 * PI).sqrt();
            integrate_gk(
                |x| norm * (-0.5 * x * x).exp() * f(mean + sd * x),
                -12.0,
                12.0,
                1e-14,
                1e-12,
            )
            .value
        }
    }
}

/// Phase averages `(⟨Δξ⟩, ⟨Δξ²⟩)` of
/// `Δξ = ½ ln(1 + a sin 2θ + a² sin²θ)` for θ uniform on `[0, π]`.
///
/// The argument is the quadratic form `x·Sx` with `x = (cos θ, sin θ)` and
/// `det S = 1`, so after rotating θ it becomes `Λ cos²t + Λ⁻¹ sin²t`.
pub fn uniform_phase_moments(a: f64) -> (f64, f64) {
    if a == 0.0 {
        return (0.0, 0.0);
    }
    let big = 1.0 + 0.5 * a * a + a.abs() * (1.0 + 0.25 * a * a).sqrt();
    let xi = |t: f64| {
        let (s, c) = t.sin_cos();
        0.5 * (big * c * c + s * s / big).ln()
    };
    // ⟨ln(Λ cos² + Λ⁻¹ sin²)⟩ = 2 ln((√Λ + 1/√Λ)/2) = ln(1 + a²/4).
    let first = 0.5 * (0.25 * a * a).ln_1p();
    // By symmetry about π/2 the average over [0, π] is that over [0, π/2];
    // the dip of width 1/Λ sits at the upper endpoint.
    let second = integrate_tanh_sinh(|t| xi(t).powi(2), 0.0, FRAC_PI_2, 1e-12).value / FRAC_PI_2;
    (first, second)
}

/// `(γ₁, γ₂)` of the Frisch–Lloyd model from the phase formalism.
///
/// For `E = k² > 0` the jumps of the log-amplitude are averaged over a
/// uniform phase and the weight law: `γ₁ = ρ⟨Δξ⟩`, `γ₂ = ρ⟨Δξ²⟩`. For
/// `E = -k²` the phase is locked and `γ₁ = √(k² + ρ⟨v⟩)`,
/// `γ₂ = ρ⟨v²⟩/(4k²)`.
pub fn phase_formalism_estimate(rho: f64, v_law: &ParameterLaw, k: f64, energy_sign: f64) -> (f64, f64) {
    if energy_sign < 0.0 {
        let m = v_law.raw_moments(2);
        return ((k * k + rho * m[1]).sqrt(), rho * m[2] / (4.0 * k * k));
    }
    let m1 = law_expectation(v_law, |v| uniform_phase_moments(v / k).0);
    let m2 = law_expectation(v_law, |v| uniform_phase_moments(v / k).1);
    (rho * m1, rho * m2)
}

/// `(γ₂/γ₁, π𝒩/γ₁)`: the SPS ratio and the ratio `ξ/l_s` of the
/// localisation length to the length `1/(π𝒩)`.
pub fn sps_diagnostics(gamma1: f64, gamma2: f64, idos: f64) -> (f64, f64) {
    (gamma2 / gamma1, PI * idos / gamma1)
}

/// `K_ν(x)` for real order from `∫₀^∞ e^{-x cosh t} cosh(νt) dt`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    // Scaled by e^{x} so that the integrand is O(1) near t = 0.
    let upper = {
        // e^{-x(cosh t - 1) + |ν| t} is below 1e-300 beyond this point.
        let mut t = 1.0f64;
        while -x * (t.cosh() - 1.0) + nu.abs() * t > -700.0 {
            t *= 1.5;
        }
        t
    };
    let f = |t: f64| (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    let r = integrate_gk(f, 0.0, upper, 0.0, 1e-13);
    r.value * (-x).exp()
}

/// Supersymmetric continuum limit of the K̃A chain: `f(Z) ∝ Z^{ν-1}
/// e^{-(Z + k²/Z)/(2g)}` with `g = ρ⟨w²⟩` and `ν = w̄/⟨w²⟩`, whose moments are
/// `⟨Z^s⟩ = k^s K_{ν+s}(k/g)/K_ν(k/g)`. Returns `ρλ₁ = ½⟨Z + k²/Z⟩`.
pub fn susy_continuum_lyapunov(w_law: &ParameterLaw, rho: f64, k: f64) -> f64 {
    let m = w_law.raw_moments(2);
    let g = rho * m[2];
    let nu = m[1] / m[2];
    let x = k / g;
    let r = |s: f64| k.powf(s) * bessel_k(nu + s, x) / bessel_k(nu, x);
    0.5 * (r(1.0) + k * k * r(-1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn an_gle_values() {
        assert!((an_gle(&ParameterLaw::gaussian(-1.0, 0.25), 1.0).unwrap() - 1.125).abs() < 1e-15);
        assert_eq!(an_gle(&ParameterLaw::exponential(0.3), 0.0).unwrap(), 0.0);
        assert!((an_gle(&ParameterLaw::dirac(-0.7), 1.3).unwrap() - 0.91).abs() < 1e-14);
        assert_eq!(an_gle(&ParameterLaw::dirac(0.0), 1.0), Err(ClosedFormError::ZeroDrift));
    }

    #[test]
    fn ktilde_gle_values() {
        assert_eq!(ktilde_gle(1.0, 2.0, 0.0).unwrap(), 0.0);
        assert!((ktilde_gle(1.0, 2.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let h = 1e-4;
        let (k, rho) = (1.5, 2.0);
        let d1 = (ktilde_gle(k, rho, h).unwrap() - ktilde_gle(k, rho, -h).unwrap()) / (2.0 * h);
        let d2 = (ktilde_gle(k, rho, h).unwrap() + ktilde_gle(k, rho, -h).unwrap()) / (h * h);
        assert!((d1 - k / rho).abs() < 1e-7);
        assert!((d2 - (k / rho).powi(2)).abs() < 1e-5);
        assert!(matches!(
            ktilde_gle(1.0, 2.0, 2.0),
            Err(ClosedFormError::BeyondRadius { .. })
        ));
    }

    #[test]
    fn an_density_normalisation() {
        let d = AnDensity::new(-0.5, 0.0).unwrap();
        assert!((d.norm - 0.5).abs() < 1e-12);
        assert!((d.pdf(1.3) - d.pdf(-1.3)).abs() < 1e-15);
        assert!((d.cdf_angle(0.0) - 0.5).abs() < 1e-12);
        assert!(matches!(
            AnDensity::new(0.1, 0.0),
            Err(ClosedFormError::NotNormalizable { .. })
        ));
        let skew = AnDensity::new(-0.3, 0.4).unwrap();
        let mass = integrate_gk(|z| skew.pdf(z), -200.0, 200.0, 1e-13, 1e-13).value;
        // (1+z²)^{-0.5+2w̄} decays as |z|^{-2.2}; the remaining tail mass is ~3e-3.
        assert!((mass - 1.0).abs() < 1e-2);
    }

    #[test]
    fn halperin_values() {
        let hi = halperin_asymptotic(50.0, 2.0);
        assert!((hi.gamma1 - 0.005).abs() < 1e-15 && (hi.gamma2 - 0.005).abs() < 1e-15);
        let lo = halperin_asymptotic(-50.0, 2.0);
        assert!((lo.gamma1 - 7.0661).abs() < 1e-4 && (lo.gamma2 - 0.01).abs() < 1e-15);
        assert!(halperin_asymptotic(1.0, 2.0).warning.is_some());
    }

    #[test]
    fn concentrated_values() {
        let c = concentrated_regime(1.0, 100.0, 3.0);
        assert!((c.gamma1 - 2.2362).abs() < 1e-4);
        assert!((c.gamma2 - 7.4680).abs() < 1e-3);
        let (r, _) = sps_diagnostics(c.gamma1, c.gamma2, 1.0);
        assert!((r - 3.340).abs() < 1e-3);
    }

    #[test]
    fn weak_disorder_matches_halperin_identification() {
        let (g1, g2) = weak_disorder_fl(1.0, 1.0, 2e-4);
        assert_eq!((g1, g2), (2.5e-5, 2.5e-5));
        let h = halperin_asymptotic(1.0, 2e-4);
        assert!((h.gamma1 - g1).abs() < 1e-18);
    }

    #[test]
    fn uniform_phase_first_moment_is_closed_form() {
        for a in [1e-3f64, 0.4, 3.0, 250.0] {
            let big = 1.0 + 0.5 * a * a + a * (1.0 + 0.25 * a * a).sqrt();
            let xi = |t: f64| 0.5 * (big * t.cos().powi(2) + t.sin().powi(2) / big).ln();
            let num = integrate_tanh_sinh(xi, 0.0, FRAC_PI_2, 1e-13).value / FRAC_PI_2;
            assert!(
                (num - uniform_phase_moments(a).0).abs() < 1e-10 * (1.0 + num.abs()),
                "a={a}"
            );
            // The raw form of the jump has the same average over [0, π].
            let raw = |t: f64| 0.5 * (1.0 + a * (2.0 * t).sin() + a * a * t.sin().powi(2)).ln();
            let r = integrate_gk(raw, 0.0, PI, 1e-13, 1e-12).value / PI;
            assert!((r - num).abs() < 1e-8 * (1.0 + r.abs()), "a={a}: {r} vs {num}");
        }
    }

    #[test]
    fn phase_formalism_limits() {
        // Small weights reduce to the perturbative result ρ⟨v²⟩/(8k²).
        let law = ParameterLaw::exponential(0.01);
        let (g1, g2) = phase_formalism_estimate(1.0, &law, 5.0, 1.0);
        let (w1, _) = weak_disorder_fl(25.0, 1.0, 2e-4);
        assert!((g1 / w1 - 1.0).abs() < 1e-4);
        assert!((g2 / w1 - 1.0).abs() < 1e-3);
        let (n1, n2) = phase_formalism_estimate(1.0, &law, 2.0, -1.0);
        assert!((n1 - (4.0f64 + 0.01).sqrt()).abs() < 1e-14);
        assert!((n2 - 2e-4 / 16.0).abs() < 1e-18);
    }

    #[test]
    fn bessel_k_known_values() {
        // K_{1/2}(x) = √(π/(2x)) e^{-x}.
        for x in [0.3, 2.0, 17.0] {
            let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert!((bessel_k(0.5, x) / exact - 1.0).abs() < 1e-11);
        }
        // K_0(1) = 0.42102443824070834.
        assert!((bessel_k(0.0, 1.0) - 0.421_024_438_240_708_34).abs() < 1e-13);
    }

    #[test]
    fn continuum_q0_is_a_total_derivative() {
        let spec = ContinuumSpec {
            mu: [0.3, -0.2, 0.1],
            cov: [[0.2, 0.05, 0.01], [0.05, 0.3, -0.02], [0.01, -0.02, 0.4]],
            variant: Variant::Compact,
            jacobian: JacobianKind::N,
        };
        spec.validate().unwrap();
        // L = d/dz (p d/dz + r) has a2 = p, a1 = p' + r, a0 = r'.
        let h = 1e-4;
        for z in [-1.7, 0.2, 2.5] {
            let r = |z: f64| {
                let (_, a1, _) = continuum_coefficients(&spec, 0.0, z);
                let da2 = (continuum_coefficients(&spec, 0.0, z + h).0 - continuum_coefficients(&spec, 0.0, z - h).0)
                    / (2.0 * h);
                a1 - da2
            };
            let (_, _, a0) = continuum_coefficients(&spec, 0.0, z);
            let dr = (r(z + h) - r(z - h)) / (2.0 * h);
            assert!((a0 - dr).abs() < 1e-6, "z={z}: {a0} vs {dr}");
        }
    }

    #[test]
    fn halperin_operator_by_hand() {
        let (theta, duu) = (1.3, 0.7);
        let spec = ContinuumSpec {
            mu: [theta, 0.0, 0.0],
            cov: [[0.0; 3], [0.0; 3], [0.0, 0.0, duu]],
            variant: Variant::Compact,
            jacobian: JacobianKind::N,
        };
        for (q, z) in [(0.0, 0.4), (0.7, -1.2), (-1.1, 2.9)] {
            let (a2, a1, a0) = continuum_coefficients(&spec, q, z);
            assert!((a2 - 0.5 * duu).abs() < 1e-15);
            assert!((a1 - theta * (1.0 + z * z)).abs() < 1e-14);
            assert!((a0 - theta * (2.0 + q) * z).abs() < 1e-14);
        }
    }

    #[test]
    fn an_eigenpair_residual() {
        let spec = an_simple_spec(-0.3);
        for (q, z) in [(0.0, 0.3), (0.5, -2.0), (1.0, 7.5)] {
            let (f, df, d2f, l) = an_exact_eigenpair(-0.3, q, z);
            assert!(eigen_residual(&spec, q, z, (f, df, d2f), l) < 1e-13);
        }
    }

    #[test]
    fn covariance_check() {
        let mut spec = an_simple_spec(-0.3);
        spec.cov[1][2] = 0.9;
        spec.cov[2][1] = 0.9;
        assert_eq!(spec.validate(), Err(ClosedFormError::InvalidCovariance));
    }
}
