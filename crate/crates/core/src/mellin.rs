// SPDX-License-Identifier: Apache-2.0

//! Mellin transform `f̌(s) = ⟨Z^s⟩` of the stationary law of the K̃A chain,
//! where `Z' = k² - Z²` between impurities and `Z → Z e^{2w}` at each one.
//!
//! `f̌` solves `-f̌(s+1) - c_s f̌(s) + k² f̌(s-1) = 0` with
//! `c_s = ρ(1 - ⟨e^{2sw}⟩)/s` and `c_0 = -2ρ⟨w⟩`. When `w ≤ 0` almost surely,
//! `f̌` is the minimal solution as `s → +∞`, so the positive side follows
//! from backward ratios; the negative side then follows from downward
//! recursion, whose terms are all non-negative. For `w ≥ 0` the symmetry
//! `Z → k²/Z` gives `f̌_w(s) = k^{2s} f̌_{-w}(-s)`.
//!
//! Laws taking both signs make `f̌` dominant at both ends; the integer
//! recurrence then does not determine it and they are rejected.

use thiserror::Error;

use crate::ensembles::{EnsembleError, ParameterLaw};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MellinError {
    #[error("moment generating function of 2w undefined at s = {s}")]
    MgfWindowExceeded { s: i64 },
    #[error("backward recursion did not settle (change {change:e} with buffer {buffer})")]
    RecurrenceUnstable { change: f64, buffer: usize },
    #[error("w takes both signs; the integer recurrence has no minimal solution")]
    MixedSignLaw,
    #[error("invalid parameters: {0}")]
    InvalidParameters(&'static str),
    #[error(transparent)]
    Law(#[from] EnsembleError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MellinSolution {
    pub window: i64,
    /// `f̌(s)` for `s = -window..=window`.
    pub fcheck: Vec<f64>,
    pub k: f64,
    pub rho: f64,
    pub w_law: ParameterLaw,
    /// Buffer beyond the window at which the backward ratios settled.
    pub buffer: usize,
}

/// Coefficients of the recurrence for a law of a given sign.
struct Coefficients {
    rho: f64,
    law: ParameterLaw,
    /// +1 when solving with `w` itself, -1 when solving with `-w`.
    sign: f64,
}

impl Coefficients {
    fn c(&self, s: i64) -> Result<f64, MellinError> {
        if s == 0 {
            return Ok(-2.0 * self.rho * self.sign * self.law.mean());
        }
        let t = 2.0 * self.sign * s as f64;
        let m = self.law.mgf(t).map_err(|_| MellinError::MgfWindowExceeded { s })?;
        if !m.is_finite() {
            return Err(MellinError::MgfWindowExceeded { s });
        }
        Ok(self.rho * (1.0 - m) / s as f64)
    }

    /// `lim s c_s` as `s → +∞`, i.e. ρ times the mass away from zero.
    fn asymptotic_rate(&self) -> f64 {
        let p0 = match self.law {
            ParameterLaw::Dirac { value } => f64::from(value == 0.0),
            ParameterLaw::TwoPoint { v1, p1, v2 } => {
                (if v1 == 0.0 { p1 } else { 0.0 }) + (if v2 == 0.0 { 1.0 - p1 } else { 0.0 })
            }
            _ => 0.0,
        };
        self.rho * (1.0 - p0)
    }
}

fn tail_ratio(k: f64, a: f64, n: f64) -> f64 {
    // r_s = f̌(s)/f̌(s-1) ~ k - a/(2s) + (-a/4 + a²/(8k))/s²
    k - a / (2.0 * n) + (-a / 4.0 + a * a / (8.0 * k)) / (n * n)
}

/// Positive-side values `f̌(1..=window)` for a law with `sign·w ≤ 0`.
fn positive_side(co: &Coefficients, k: f64, window: i64, buffer: usize) -> Result<Vec<f64>, MellinError> {
    let n = window + buffer as i64;
    let a = co.asymptotic_rate();
    let mut r = tail_ratio(k, a, (n + 1) as f64);
    let mut ratios = vec![0.0; window as usize + 1];
    for s in (1..=n).rev() {
        r = k * k / (co.c(s)? + r);
        if s <= window {
            ratios[s as usize] = r;
        }
    }
    let mut out = Vec::with_capacity(window as usize);
    let mut f = 1.0;
    for s in 1..=window as usize {
        f *= ratios[s];
        out.push(f);
    }
    Ok(out)
}

fn solve_signed(co: &Coefficients, k: f64, window: i64) -> Result<(Vec<f64>, usize), MellinError> {
    let w1 = window.max(1);
    let mut buffer = 20usize;
    let mut prev = positive_side(co, k, w1, buffer)?;
    loop {
        let next_buffer = buffer * 2;
        let next = positive_side(co, k, w1, next_buffer)?;
        let change = (next[0] - prev[0]).abs();
        buffer = next_buffer;
        prev = next;
        if change < 1e-13 * prev[0].abs().max(1e-300) {
            break;
        }
        if buffer > 1 << 22 {
            return Err(MellinError::RecurrenceUnstable { change, buffer });
        }
    }
    let pos = prev;
    // s = 0 equation gives f̌(-1); below that k² f̌(s-1) = f̌(s+1) + c_s f̌(s).
    let mut neg = Vec::with_capacity(w1 as usize);
    let fm1 = (pos[0] + co.c(0)?) / (k * k);
    neg.push(fm1);
    let (mut f_up, mut f_here) = (1.0, fm1);
    for s in (-(w1 - 1)..=-1).rev() {
        let f_down = (f_up + co.c(s)? * f_here) / (k * k);
        neg.push(f_down);
        f_up = f_here;
        f_here = f_down;
    }
    // Check the window of the moment generating function on the negative side.
    co.c(-w1 - 1)?;
    let mut f = Vec::with_capacity(2 * w1 as usize + 1);
    f.extend(neg.iter().rev());
    f.push(1.0);
    f.extend(pos.iter());
    Ok((f, buffer))
}

/// Mellin transform of the invariant density on `s ∈ [-window, window]`.
pub fn invariant_mellin(w_law: ParameterLaw, rho: f64, k: f64, window: i64) -> Result<MellinSolution, MellinError> {
    w_law.validate()?;
    if !(rho > 0.0 && k > 0.0 && window >= 1) {
        return Err(MellinError::InvalidParameters("need rho > 0, k > 0 and window >= 1"));
    }
    let sign = if w_law.is_nonpositive() {
        1.0
    } else if w_law.is_nonnegative() {
        -1.0
    } else {
        return Err(MellinError::MixedSignLaw);
    };
    let co = Coefficients { rho, law: w_law, sign };
    let (f, buffer) = if w_law.mean() == 0.0 && w_law.variance() == 0.0 {
        ((-window..=window).map(|s| k.powi(s as i32)).collect(), 0)
    } else {
        let (g, buffer) = solve_signed(&co, k, window)?;
        if sign > 0.0 {
            (g, buffer)
        } else {
            // f̌_w(s) = k^{2s} f̌_{-w}(-s); g is indexed by -s.
            let n = g.len();
            let f = (0..n)
                .map(|i| {
                    let s = i as i64 - window;
                    k.powi(2 * s as i32) * g[n - 1 - i]
                })
                .collect();
            (f, buffer)
        }
    };
    Ok(MellinSolution {
        window,
        fcheck: f,
        k,
        rho,
        w_law,
        buffer,
    })
}

impl MellinSolution {
    pub fn get(&self, s: i64) -> f64 {
        assert!(s.abs() <= self.window, "s = {s} outside the window");
        self.fcheck[(s + self.window) as usize]
    }

    /// `c_s` of the recurrence for this law.
    pub fn coefficient(&self, s: i64) -> Result<f64, MellinError> {
        Coefficients {
            rho: self.rho,
            law: self.w_law,
            sign: 1.0,
        }
        .c(s)
    }

    /// Relative residual of the recurrence at an interior point.
    pub fn recurrence_residual(&self, s: i64) -> Result<f64, MellinError> {
        let (fp, f0, fm) = (self.get(s + 1), self.get(s), self.get(s - 1));
        let c = self.coefficient(s)?;
        let k2 = self.k * self.k;
        let res = -fp - c * f0 + k2 * fm;
        Ok(res.abs() / (fp.abs() + (c * f0).abs() + (k2 * fm).abs()))
    }
}

/// `ρλ₁ = ½[f̌(1) + k² f̌(-1)]`, the Lyapunov exponent per unit length.
pub fn lyapunov_mellin(sol: &MellinSolution) -> f64 {
    0.5 * (sol.get(1) + sol.k * sol.k * sol.get(-1))
}

/// Miller's backward recursion from `f̌(N+1) = 0`, `f̌(N) = seed` with
/// `N = window + buffer`, normalised by `f̌(0) = 1`. Returns `f̌(0..=window)`.
///
/// Independent of the ratio scheme used by [`invariant_mellin`]; only valid
/// for `w ≤ 0`.
pub fn miller_backward(
    w_law: ParameterLaw,
    rho: f64,
    k: f64,
    window: i64,
    buffer: usize,
    seed: f64,
) -> Result<Vec<f64>, MellinError> {
    if !w_law.is_nonpositive() {
        return Err(MellinError::MixedSignLaw);
    }
    let co = Coefficients {
        rho,
        law: w_law,
        sign: 1.0,
    };
    let n = window + buffer as i64;
    let mut vals = vec![0.0; n as usize + 2];
    vals[n as usize] = seed;
    for s in (1..=n).rev() {
        // -f(s+1) - c_s f(s) + k² f(s-1) = 0
        let v = (vals[s as usize + 1] + co.c(s)? * vals[s as usize]) / (k * k);
        vals[s as usize - 1] = v;
        // Rescale to stay in range; the normalisation at s = 0 removes it.
        // Only the two most recent values matter, older ones may flush to 0.
        let scale = if v.abs() > 1e200 {
            1e-200
        } else if v.abs() < 1e-200 && v != 0.0 {
            1e200
        } else {
            1.0
        };
        if scale != 1.0 {
            for x in vals[s as usize - 1..].iter_mut() {
                *x *= scale;
            }
        }
    }
    let f0 = vals[0];
    Ok(vals[..=window as usize].iter().map(|v| v / f0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_fixed_point() {
        let sol = invariant_mellin(ParameterLaw::dirac(0.0), 1.0, 1.7, 5).unwrap();
        for s in -5..=5 {
            assert!((sol.get(s) - 1.7f64.powi(s as i32)).abs() < 1e-12);
        }
        assert!((lyapunov_mellin(&sol) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn recurrence_holds_in_the_window() {
        for law in [
            ParameterLaw::dirac(-0.3),
            ParameterLaw::two_point(-0.4, 0.5, -0.05),
            ParameterLaw::two_point(0.2, 0.3, 0.0),
        ] {
            let sol = invariant_mellin(law, 1.0, 1.0, 6).unwrap();
            assert_eq!(sol.get(0), 1.0);
            for s in -5..=5 {
                assert!(sol.recurrence_residual(s).unwrap() < 1e-12, "{law:?} s={s}");
            }
        }
    }

    #[test]
    fn mixed_sign_is_rejected() {
        assert_eq!(
            invariant_mellin(ParameterLaw::gaussian(-0.1, 0.05), 1.0, 1.0, 3),
            Err(MellinError::MixedSignLaw)
        );
    }

    #[test]
    fn mgf_window_is_checked() {
        // w ~ Exp(0.2): ⟨e^{2sw}⟩ is finite only for s < 2.5.
        assert!(matches!(
            invariant_mellin(ParameterLaw::exponential(0.2), 1.0, 1.0, 3),
            Err(MellinError::MgfWindowExceeded { .. })
        ));
        assert!(invariant_mellin(ParameterLaw::exponential(0.2), 1.0, 1.0, 1).is_ok());
    }

    #[test]
    fn miller_agrees_with_ratios() {
        let law = ParameterLaw::two_point(-0.5, 0.4, -0.1);
        let sol = invariant_mellin(law, 1.3, 0.8, 4).unwrap();
        let miller = miller_backward(law, 1.3, 0.8, 4, 200_000, 1.0).unwrap();
        for s in 0..=4 {
            assert!((miller[s as usize] - sol.get(s)).abs() < 1e-6 * sol.get(s), "s={s}");
        }
    }
}
