// SPDX-License-Identifier: Apache-2.0

//! Adaptive Dormand-Prince 5(4) integration for small complex systems.
//!
//! The integrator runs in either direction (`t1 < t0` is allowed) and reports
//! every accepted step through an observer, which is how callers build grids.

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, rhs: Self) {
        self.accepted += rhs.accepted;
        self.rejected += rhs.rejected;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub tol: Tolerance,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Integrator {
    pub fn new(tol: Tolerance) -> Self {
        Self {
            tol,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }

    pub fn with_h_init(mut self, h: f64) -> Self {
        self.h_init = h.abs();
        self
    }

    pub fn with_h_max(mut self, h: f64) -> Self {
        self.h_max = h.abs();
        self
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` and returns the final state
    /// together with the step size that would have been tried next.
    ///
    /// `observe(t, y, dy)` is called after every accepted step, including the
    /// final one landing exactly on `t1`.
    pub fn run<const N: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        t1: f64,
        y0: [C64; N],
        mut observe: O,
    ) -> Result<(([C64; N], f64), StepStats), OdeError>
    where
        F: FnMut(f64, &[C64; N]) -> [C64; N],
        O: FnMut(f64, &[C64; N], &[C64; N]),
    {
        let mut stats = StepStats::default();
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(((y0, self.h_init), stats));
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = self.h_init.min(self.h_max).min(span.abs());
        let h_floor = 1e-14 * t0.abs().max(t1.abs()).max(1.0);

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(OdeError::TooManySteps {
                    t,
                    max_steps: self.max_steps,
                });
            }
            let remaining = (t1 - t).abs();
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            let hs = dir * step;

            let (y_new, k7, err) = dp_step(&mut f, t, &y, &k1, hs);
            let err_norm = error_norm(&y, &y_new, &err, self.tol);

            if !err_norm.is_finite() {
                if step <= h_floor {
                    return Err(OdeError::NonFinite { t });
                }
                h = step * 0.1;
                stats.rejected += 1;
                continue;
            }

            if err_norm <= 1.0 {
                stats.accepted += 1;
                t = if last { t1 } else { t + hs };
                y = y_new;
                k1 = k7;
                if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(OdeError::NonFinite { t });
                }
                observe(t, &y, &k1);
                let grow = if err_norm == 0.0 {
                    5.0
                } else {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                let h_next = (step * grow).min(self.h_max);
                if last {
                    return Ok(((y, h_next.max(h)), stats));
                }
                h = h_next;
            } else {
                stats.rejected += 1;
                let shrink = (0.9 * err_norm.powf(-0.25)).clamp(0.1, 0.9);
                h = step * shrink;
                if h < h_floor {
                    return Err(OdeError::StepUnderflow { t });
                }
            }
        }
    }
}

fn error_norm<const N: usize>(y: &[C64; N], y_new: &[C64; N], err: &[C64; N], tol: Tolerance) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..N {
        let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
        let e = err[i].norm() / scale;
        if e.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(e);
    }
    worst
}

// Dormand-Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let ch = c * h;
        for i in 0..N {
            out[i] += k[i] * ch;
        }
    }
    out
}

fn dp_step<const N: usize, F>(f: &mut F, t: f64, y: &[C64; N], k1: &[C64; N], h: f64) -> ([C64; N], [C64; N], [C64; N])
where
    F: FnMut(f64, &[C64; N]) -> [C64; N],
{
    let k2 = f(t + C2 * h, &combine(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &combine(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y_new = combine(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y_new);
    let mut err = [C64::new(0.0, 0.0); N];
    for i in 0..N {
        err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
    }
    (y_new, k7, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_backward_and_forward() {
        let integ = Integrator::new(Tolerance::new(1e-11, 1e-14));
        let ((y, _), _) = integ
            .run(|_, y: &[C64; 1]| [-y[0]], 0.0, 3.0, [C64::new(1.0, 0.0)], |_, _, _| {})
            .unwrap();
        assert!((y[0].re - (-3.0f64).exp()).abs() < 1e-10);
        let ((y, _), _) = integ
            .run(|_, y: &[C64; 1]| [-y[0]], 3.0, 0.0, [C64::new(1.0, 0.0)], |_, _, _| {})
            .unwrap();
        assert!((y[0].re - 3.0f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn oscillator_phase() {
        let integ = Integrator::new(Tolerance::new(1e-12, 1e-14));
        let i = C64::new(0.0, 1.0);
        let ((y, _), stats) = integ
            .run(
                move |_, y: &[C64; 1]| [i * y[0]],
                0.0,
                10.0,
                [C64::new(1.0, 0.0)],
                |_, _, _| {},
            )
            .unwrap();
        let exact = (i * 10.0).exp();
        assert!((y[0] - exact).norm() < 1e-9);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn observer_sees_the_endpoint() {
        let integ = Integrator::new(Tolerance::new(1e-9, 1e-12));
        let mut last = f64::NAN;
        integ
            .run(
                |_, y: &[C64; 1]| [y[0]],
                1.0,
                2.5,
                [C64::new(1.0, 0.0)],
                |t, _, _| last = t,
            )
            .unwrap();
        assert_eq!(last, 2.5);
    }
}
