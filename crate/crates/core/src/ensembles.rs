// SPDX-License-Identifier: Apache-2.0

//! Parameter laws, matrix ensembles and the Lévy exponent of the impurity
//! potential.
//!
//! Fourier conventions: `p̂(s) = ⟨e^{-isv}⟩`, `𝓛(s) = ρ(1 - p̂(s))` and
//! `p̃(r) = p̂(-ir) = ⟨e^{-rv}⟩`.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sl2core::{compose_iwasawa, IwasawaParams, SlMatrix, Variant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("operation not supported for this model: {0}")]
    UnsupportedLaw(&'static str),
    #[error("Laplace transform of the weight law diverges at r = {r}")]
    DivergentTransform { r: f64 },
    #[error("moment generating function undefined at t = {t}")]
    MgfUndefined { t: f64 },
    #[error("zero energy has no transfer-matrix parametrisation")]
    ZeroEnergy,
}

/// Law of a scalar matrix parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParameterLaw {
    Dirac {
        value: f64,
    },
    Exponential {
        mean: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    /// `v1` with probability `p1`, otherwise `v2`.
    TwoPoint {
        v1: f64,
        p1: f64,
        v2: f64,
    },
}

impl ParameterLaw {
    pub const ZERO: ParameterLaw = ParameterLaw::Dirac { value: 0.0 };

    pub fn dirac(value: f64) -> Self {
        Self::Dirac { value }
    }

    pub fn exponential(mean: f64) -> Self {
        Self::Exponential { mean }
    }

    pub fn gaussian(mean: f64, variance: f64) -> Self {
        Self::Gaussian { mean, variance }
    }

    pub fn two_point(v1: f64, p1: f64, v2: f64) -> Self {
        Self::TwoPoint { v1, p1, v2 }
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        let bad = |m: &str| Err(EnsembleError::InvalidLaw(m.to_string()));
        match *self {
            Self::Dirac { value } if !value.is_finite() => bad("non-finite Dirac value"),
            Self::Exponential { mean } if !(mean > 0.0 && mean.is_finite()) => bad("exponential mean must be positive"),
            Self::Gaussian { mean, variance } if !(mean.is_finite() && variance >= 0.0 && variance.is_finite()) => {
                bad("Gaussian needs a finite mean and non-negative variance")
            }
            Self::TwoPoint { v1, p1, v2 } if !(v1.is_finite() && v2.is_finite() && (0.0..=1.0).contains(&p1)) => {
                bad("two-point law needs finite values and p1 in [0, 1]")
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Dirac { value } => value,
            Self::Exponential { mean } => mean,
            Self::Gaussian { mean, .. } => mean,
            Self::TwoPoint { v1, p1, v2 } => p1 * v1 + (1.0 - p1) * v2,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Dirac { .. } => 0.0,
            Self::Exponential { mean } => mean * mean,
            Self::Gaussian { variance, .. } => variance,
            Self::TwoPoint { v1, p1, v2 } => p1 * (1.0 - p1) * (v1 - v2) * (v1 - v2),
        }
    }

    /// Raw moments `⟨v^n⟩` for `n = 0..=order`.
    pub fn raw_moments(&self, order: usize) -> Vec<f64> {
        let mut m = vec![1.0; order + 1];
        for n in 1..=order {
            let nf = n as f64;
            m[n] = match *self {
                Self::Dirac { value } => value.powi(n as i32),
                Self::Exponential { mean } => m[n - 1] * nf * mean,
                Self::Gaussian { mean, variance } => {
                    let prev2 = if n >= 2 { m[n - 2] } else { 0.0 };
                    mean * m[n - 1] + (nf - 1.0) * variance * prev2
                }
                Self::TwoPoint { v1, p1, v2 } => p1 * v1.powi(n as i32) + (1.0 - p1) * v2.powi(n as i32),
            };
        }
        m
    }

    pub fn is_nonnegative(&self) -> bool {
        match *self {
            Self::Dirac { value } => value >= 0.0,
            Self::Exponential { .. } => true,
            Self::Gaussian { mean, variance } => variance == 0.0 && mean >= 0.0,
            Self::TwoPoint { v1, p1, v2 } => (v1 >= 0.0 || p1 == 0.0) && (v2 >= 0.0 || p1 == 1.0),
        }
    }

    pub fn is_nonpositive(&self) -> bool {
        match *self {
            Self::Exponential { .. } => false,
            Self::Gaussian { mean, variance } => variance == 0.0 && mean <= 0.0,
            _ => self.negated().is_nonnegative(),
        }
    }

    /// Law of `-v`, where it stays inside the family.
    pub fn negated(&self) -> ParameterLaw {
        match *self {
            Self::Dirac { value } => Self::Dirac { value: -value },
            Self::Gaussian { mean, variance } => Self::Gaussian { mean: -mean, variance },
            Self::TwoPoint { v1, p1, v2 } => Self::TwoPoint { v1: -v1, p1, v2: -v2 },
            Self::Exponential { .. } => *self,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Dirac { value } => value,
            Self::Exponential { mean } => Exp::new(1.0 / mean).expect("validated mean").sample(rng),
            Self::Gaussian { mean, variance } => Normal::new(mean, variance.sqrt())
                .expect("validated variance")
                .sample(rng),
            Self::TwoPoint { v1, p1, v2 } => {
                if rng.gen::<f64>() < p1 {
                    v1
                } else {
                    v2
                }
            }
        }
    }

    /// `p̂(s) = ⟨e^{-isv}⟩`.
    pub fn char_fn(&self, s: f64) -> C64 {
        let i = C64::i();
        match *self {
            Self::Dirac { value } => (-i * s * value).exp(),
            Self::Exponential { mean } => 1.0 / (1.0 + i * s * mean),
            Self::Gaussian { mean, variance } => (-i * s * mean - 0.5 * variance * s * s).exp(),
            Self::TwoPoint { v1, p1, v2 } => p1 * (-i * s * v1).exp() + (1.0 - p1) * (-i * s * v2).exp(),
        }
    }

    /// `(1 - p̂(s)) / (is)`, finite at `s = 0` where it equals the mean.
    pub fn one_minus_char_over_is(&self, s: f64) -> C64 {
        let i = C64::i();
        match *self {
            Self::Dirac { value } => dirac_kernel(value, s),
            Self::Exponential { mean } => mean / (1.0 + i * s * mean),
            Self::Gaussian { mean, variance } => {
                if s == 0.0 {
                    return C64::new(mean, 0.0);
                }
                let a = i * s * mean + 0.5 * variance * s * s;
                -cexpm1(-a) / (i * s)
            }
            Self::TwoPoint { v1, p1, v2 } => p1 * dirac_kernel(v1, s) + (1.0 - p1) * dirac_kernel(v2, s),
        }
    }

    /// `⟨e^{tv}⟩`.
    pub fn mgf(&self, t: f64) -> Result<f64, EnsembleError> {
        match *self {
            Self::Dirac { value } => Ok((t * value).exp()),
            Self::Exponential { mean } => {
                if t * mean < 1.0 {
                    Ok(1.0 / (1.0 - t * mean))
                } else {
                    Err(EnsembleError::MgfUndefined { t })
                }
            }
            Self::Gaussian { mean, variance } => Ok((t * mean + 0.5 * variance * t * t).exp()),
            Self::TwoPoint { v1, p1, v2 } => Ok(p1 * (t * v1).exp() + (1.0 - p1) * (t * v2).exp()),
        }
    }

    /// `(1 - ⟨e^{-rv}⟩) / r`, finite at `r = 0`.
    pub fn one_minus_laplace_over_r(&self, r: f64) -> Result<f64, EnsembleError> {
        if r == 0.0 {
            return Ok(self.mean());
        }
        let kernel = |v: f64| -(-r * v).exp_m1() / r;
        match *self {
            Self::Dirac { value } => Ok(kernel(value)),
            Self::Exponential { mean } => {
                if 1.0 + mean * r > 0.0 {
                    Ok(mean / (1.0 + mean * r))
                } else {
                    Err(EnsembleError::DivergentTransform { r })
                }
            }
            Self::Gaussian { mean, variance } => Ok(-(-r * mean + 0.5 * variance * r * r).exp_m1() / r),
            Self::TwoPoint { v1, p1, v2 } => Ok(p1 * kernel(v1) + (1.0 - p1) * kernel(v2)),
        }
    }
}

fn dirac_kernel(v: f64, s: f64) -> C64 {
    // (1 - e^{-ix})/(is) with x = vs equals v e^{-ix/2} sinc(x/2).
    let h = 0.5 * v * s;
    let sinc = if h.abs() < 1e-4 { 1.0 - h * h / 6.0 } else { h.sin() / h };
    v * sinc * C64::new(h.cos(), -h.sin())
}

/// `e^z - 1` without cancellation for small `|z|`.
pub fn cexpm1(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    let half = (0.5 * y).sin();
    C64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin())
}

/// An i.i.d. ensemble of matrices `K(θ)A(w)N(u)` or `K̃(θ)A(w)N(u)`.
///
/// `theta_law` is the law of the segment length ℓ and `u_law` that of the
/// impurity weight v: the matrix parameters are `θ = kℓ` and `u = v/k`, and `w`
/// is taken as is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEnsemble {
    pub variant: Variant,
    pub k: f64,
    pub rho: f64,
    pub theta_law: ParameterLaw,
    pub w_law: ParameterLaw,
    pub u_law: ParameterLaw,
}

impl MatrixEnsemble {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(EnsembleError::InvalidLaw("k must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(EnsembleError::InvalidLaw("rho must be positive".into()));
        }
        self.theta_law.validate()?;
        self.w_law.validate()?;
        self.u_law.validate()
    }

    /// Frisch-Lloyd transfer matrices `K(kℓ)N(v/k)` (E > 0) or `K̃(kℓ)N(v/k)`
    /// (E < 0) with Poisson impurities of density ρ.
    pub fn frisch_lloyd(energy: f64, rho: f64, weights: ParameterLaw) -> Result<Self, EnsembleError> {
        if energy == 0.0 {
            return Err(EnsembleError::ZeroEnergy);
        }
        let e = Self {
            variant: if energy > 0.0 {
                Variant::Compact
            } else {
                Variant::Hyperbolic
            },
            k: energy.abs().sqrt(),
            rho,
            theta_law: ParameterLaw::exponential(1.0 / rho),
            w_law: ParameterLaw::ZERO,
            u_law: weights,
        };
        e.validate()?;
        Ok(e)
    }

    /// Free hyperbolic products `K̃(kℓ)` with exponential ℓ.
    pub fn ktilde_subgroup(k: f64, rho: f64) -> Self {
        Self {
            variant: Variant::Hyperbolic,
            k,
            rho,
            theta_law: ParameterLaw::exponential(1.0 / rho),
            w_law: ParameterLaw::ZERO,
            u_law: ParameterLaw::ZERO,
        }
    }

    /// Products `A(w)N(u)` of the AN subgroup.
    pub fn an(w_law: ParameterLaw, u_law: ParameterLaw) -> Self {
        Self {
            variant: Variant::Compact,
            k: 1.0,
            rho: 1.0,
            theta_law: ParameterLaw::ZERO,
            w_law,
            u_law,
        }
    }

    /// Supersymmetric products `K̃(kℓ)A(w)` with exponential ℓ.
    pub fn ktilde_a(k: f64, rho: f64, w_law: ParameterLaw) -> Self {
        Self {
            variant: Variant::Hyperbolic,
            k,
            rho,
            theta_law: ParameterLaw::exponential(1.0 / rho),
            w_law,
            u_law: ParameterLaw::ZERO,
        }
    }

    pub fn identity() -> Self {
        Self::an(ParameterLaw::ZERO, ParameterLaw::ZERO)
    }

    pub fn sample_params<R: Rng + ?Sized>(&self, rng: &mut R) -> IwasawaParams {
        let theta = self.k * self.theta_law.sample(rng);
        let w = self.w_law.sample(rng);
        let u = self.u_law.sample(rng) / self.k;
        IwasawaParams::new(theta, w, u, self.variant)
    }

    pub fn sample_matrix<R: Rng + ?Sized>(&self, rng: &mut R) -> (SlMatrix, IwasawaParams) {
        let p = self.sample_params(rng);
        (compose_iwasawa(&p), p)
    }

    /// Free propagation over a segment of length `x`.
    pub fn free_segment(&self, x: f64) -> SlMatrix {
        match self.variant {
            Variant::Compact => SlMatrix::rotation(self.k * x),
            Variant::Hyperbolic => SlMatrix::hyperbolic(self.k * x),
        }
    }

    /// Lévy model of the impurity potential for Frisch-Lloyd ensembles.
    pub fn levy_model(&self) -> LevyModel {
        LevyModel::CompoundPoisson {
            rho: self.rho,
            weights: self.u_law,
        }
    }
}

/// Integrated impurity potential as a Lévy process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevyModel {
    CompoundPoisson { rho: f64, weights: ParameterLaw },
    GaussianWhiteNoise { sigma: f64 },
}

impl LevyModel {
    pub fn compound_poisson(rho: f64, weights: ParameterLaw) -> Self {
        Self::CompoundPoisson { rho, weights }
    }

    pub fn gaussian_white_noise(sigma: f64) -> Self {
        Self::GaussianWhiteNoise { sigma }
    }

    pub fn free() -> Self {
        Self::CompoundPoisson {
            rho: 1.0,
            weights: ParameterLaw::ZERO,
        }
    }

    /// `𝓛(s)`.
    pub fn levy(&self, s: f64) -> C64 {
        match *self {
            Self::CompoundPoisson { rho, weights } => rho * (1.0 - weights.char_fn(s)),
            Self::GaussianWhiteNoise { sigma } => C64::new(0.5 * sigma * s * s, 0.0),
        }
    }

    /// `𝓛(s) / (is)`, evaluated without cancellation near `s = 0`.
    pub fn levy_over_is(&self, s: f64) -> C64 {
        match *self {
            Self::CompoundPoisson { rho, weights } => rho * weights.one_minus_char_over_is(s),
            Self::GaussianWhiteNoise { sigma } => C64::new(0.0, -0.5 * sigma * s),
        }
    }

    /// Taylor coefficients of `𝓛(s)/(is)` in powers of `s`.
    pub fn levy_over_is_taylor(&self, order: usize) -> Vec<C64> {
        match *self {
            Self::CompoundPoisson { rho, weights } => {
                let m = weights.raw_moments(order + 1);
                let mut fact = 1.0;
                (0..=order)
                    .map(|n| {
                        fact *= (n + 1) as f64;
                        rho * (-C64::i()).powi(n as i32) * m[n + 1] / fact
                    })
                    .collect()
            }
            Self::GaussianWhiteNoise { sigma } => {
                let mut c = vec![C64::new(0.0, 0.0); order + 1];
                if order >= 1 {
                    c[1] = C64::new(0.0, -0.5 * sigma);
                }
                c
            }
        }
    }

    /// `p̂(s)`.
    pub fn weight_char_fn(&self, s: f64) -> Result<C64, EnsembleError> {
        match *self {
            Self::CompoundPoisson { weights, .. } => Ok(weights.char_fn(s)),
            Self::GaussianWhiteNoise { .. } => Err(EnsembleError::UnsupportedLaw("white noise has no weight law")),
        }
    }

    /// `p̃(r) = ⟨e^{-rv}⟩`.
    pub fn weight_laplace(&self, r: f64) -> Result<f64, EnsembleError> {
        match *self {
            Self::CompoundPoisson { weights, .. } => {
                if let ParameterLaw::Exponential { mean } = weights {
                    if 1.0 + mean * r <= 0.0 {
                        return Err(EnsembleError::DivergentTransform { r });
                    }
                }
                weights.mgf(-r).map_err(|_| EnsembleError::DivergentTransform { r })
            }
            Self::GaussianWhiteNoise { .. } => Err(EnsembleError::UnsupportedLaw("white noise has no weight law")),
        }
    }

    /// `ρ(1 - p̃(r)) / r`, the Laplace-picture potential without `k²`.
    pub fn laplace_potential(&self, r: f64) -> Result<f64, EnsembleError> {
        match *self {
            Self::CompoundPoisson { rho, weights } => weights.one_minus_laplace_over_r(r).map(|v| rho * v),
            Self::GaussianWhiteNoise { sigma } => Ok(-0.5 * sigma * r),
        }
    }

    /// Taylor coefficients of `ρ(1 - p̃(r))/r` in powers of `r`.
    pub fn laplace_potential_taylor(&self, order: usize) -> Vec<f64> {
        match *self {
            Self::CompoundPoisson { rho, weights } => {
                let m = weights.raw_moments(order + 1);
                let mut fact = 1.0;
                (0..=order)
                    .map(|n| {
                        fact *= (n + 1) as f64;
                        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                        rho * sign * m[n + 1] / fact
                    })
                    .collect()
            }
            Self::GaussianWhiteNoise { sigma } => {
                let mut c = vec![0.0; order + 1];
                if order >= 1 {
                    c[1] = -0.5 * sigma;
                }
                c
            }
        }
    }

    /// `ρ⟨v⟩` (compound Poisson) or 0 (white noise): the mean potential.
    pub fn mean_potential(&self) -> f64 {
        match *self {
            Self::CompoundPoisson { rho, weights } => rho * weights.mean(),
            Self::GaussianWhiteNoise { .. } => 0.0,
        }
    }

    /// `ρ⟨v²⟩` or σ: the strength of the potential fluctuations.
    pub fn noise_strength(&self) -> f64 {
        match *self {
            Self::CompoundPoisson { rho, weights } => rho * weights.raw_moments(2)[2],
            Self::GaussianWhiteNoise { sigma } => sigma,
        }
    }

    pub fn has_nonnegative_weights(&self) -> bool {
        match *self {
            Self::CompoundPoisson { weights, .. } => weights.is_nonnegative(),
            Self::GaussianWhiteNoise { .. } => false,
        }
    }

    /// Root-mean-square weight.
    pub fn weight_scale(&self) -> f64 {
        match *self {
            Self::CompoundPoisson { weights, .. } => {
                let m = weights.raw_moments(2);
                m[2].sqrt()
            }
            Self::GaussianWhiteNoise { .. } => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponential_levy_exponent() {
        let m = LevyModel::compound_poisson(1.3, ParameterLaw::exponential(0.4));
        for &s in &[-3.0, -0.1, 0.0, 0.7, 12.0] {
            let i = C64::i();
            let exact = i * 1.3 * 0.4 * s / (1.0 + i * s * 0.4);
            assert!((m.levy(s) - exact).norm() < 1e-15);
        }
    }

    #[test]
    fn white_noise_value() {
        let m = LevyModel::gaussian_white_noise(2.0);
        assert_eq!(m.levy(1.0), C64::new(1.0, 0.0));
        assert_eq!(m.levy(0.0), C64::new(0.0, 0.0));
    }

    #[test]
    fn levy_over_is_has_no_cancellation() {
        for law in [
            ParameterLaw::dirac(0.7),
            ParameterLaw::exponential(0.3),
            ParameterLaw::gaussian(0.2, 0.5),
            ParameterLaw::two_point(-1.0, 0.4, 2.0),
        ] {
            let m = LevyModel::compound_poisson(2.0, law);
            let c = m.levy_over_is_taylor(6);
            for &s in &[1e-9f64, 1e-5, 1e-3] {
                let series: C64 = c.iter().enumerate().map(|(n, cn)| cn * s.powi(n as i32)).sum();
                assert!((m.levy_over_is(s) - series).norm() < 1e-13, "{law:?} {s}");
            }
            let s = 0.9;
            let direct = m.levy(s) / (C64::i() * s);
            assert!((m.levy_over_is(s) - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn laplace_values() {
        let m = LevyModel::compound_poisson(1.0, ParameterLaw::exponential(0.01));
        assert_eq!(m.weight_laplace(0.0).unwrap(), 1.0);
        assert!((m.weight_laplace(100.0).unwrap() - 0.5).abs() < 1e-15);
        let d = LevyModel::compound_poisson(1.0, ParameterLaw::dirac(0.3));
        assert!((d.weight_laplace(2.0).unwrap() - (-0.6f64).exp()).abs() < 1e-15);
        assert!(matches!(
            m.weight_laplace(-200.0),
            Err(EnsembleError::DivergentTransform { .. })
        ));
        assert!(LevyModel::gaussian_white_noise(1.0).weight_laplace(1.0).is_err());
    }

    #[test]
    fn gaussian_moments_recursion() {
        let m = ParameterLaw::gaussian(0.5, 2.0).raw_moments(4);
        assert!((m[2] - 2.25).abs() < 1e-14);
        assert!((m[3] - (0.125 + 3.0 * 0.5 * 2.0)).abs() < 1e-14);
        assert!((m[4] - (0.0625 + 6.0 * 0.25 * 2.0 + 3.0 * 4.0)).abs() < 1e-13);
    }

    #[test]
    fn identity_ensemble_samples_identity() {
        let e = MatrixEnsemble::identity();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            assert_eq!(e.sample_matrix(&mut rng).0, SlMatrix::IDENTITY);
        }
    }

    #[test]
    fn ktilde_factor_is_symmetric() {
        let e = MatrixEnsemble::ktilde_subgroup(1.5, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let (m, _) = e.sample_matrix(&mut rng);
            assert_eq!(m.b, m.c);
            assert!(m.is_unimodular());
        }
    }

    #[test]
    fn law_config_roundtrip() {
        let e = MatrixEnsemble::frisch_lloyd(-4.0, 1.0, ParameterLaw::exponential(0.01)).unwrap();
        let text = toml::to_string(&e).unwrap();
        let back: MatrixEnsemble = toml::from_str(&text).unwrap();
        assert_eq!(e, back);
    }
}
