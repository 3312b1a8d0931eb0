// SPDX-License-Identifier: Apache-2.0

//! Exact recessive solutions of the Frisch–Lloyd model with exponential
//! weights in terms of the Whittaker function `W_{κ,1/2}`.
//!
//! With `p̂(s) = 1/(1 + i v̄ s)` the Fourier equation becomes
//! `φ'' = [E - ρ v̄/(1 + i v̄ s)] φ`. Setting `x = (-2ik/v̄)(1 + i v̄ s)` for
//! `E = k²` gives Whittaker's equation with `κ = -iρ/(2k)`, `μ = 1/2`, and the
//! recessive solution is `W_{κ,1/2}(x)`, with `dx/ds = 2k`. In the Laplace
//! picture (`E = -k²`) the same holds with `x = (2k/v̄)(1 + v̄ r)` and
//! `κ = -ρ/(2k)`.
//!
//! Up to a constant, `W_{κ,1/2}(x) = x^κ e^{-x/2} ∫₀^∞ e^{-τ} τ^{-κ} (1 + τ/x)^κ dτ`
//! for `|arg x| < π` and `Re κ < 1`.

use num_complex::Complex64 as C64;
use sl2rmp::numerics::quad::gauss_legendre_on;

/// `(I(x), I'(x))` with `I(x) = ∫₀^∞ e^{-τ} τ^{-κ} (1 + τ/x)^κ dτ`.
///
/// Computed in `τ = e^u`, where the integrand is smooth and decays at both
/// ends, by composite Gauss–Legendre on `u ∈ [-45, 4.5]`.
fn whittaker_integral(kappa: C64, x: C64) -> (C64, C64) {
    let nodes = gauss_legendre_on(24, 0.0, 1.0);
    let (lo, hi, pieces) = (-45.0, 4.5, 400);
    let h = (hi - lo) / pieces as f64;
    let (mut i0, mut i1) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for p in 0..pieces {
        let a = lo + p as f64 * h;
        for &(t, w) in &nodes {
            let u = a + t * h;
            let tau = u.exp();
            let base = C64::new(1.0, 0.0) + tau / x;
            // dτ = τ du
            let common = (-tau).exp() * tau * (C64::new(u, 0.0) * -kappa).exp();
            let pk = (kappa * base.ln()).exp();
            i0 += w * h * common * pk;
            i1 += w * h * common * kappa * pk / base * (-tau / (x * x));
        }
    }
    (i0, i1)
}

/// `(W, dW/dx)` up to a common constant.
pub fn whittaker_w(kappa: C64, x: C64) -> (C64, C64) {
    let (i0, i1) = whittaker_integral(kappa, x);
    let e = (-0.5 * x + kappa * x.ln()).exp();
    (e * i0, e * (i1 + (kappa / x - 0.5) * i0))
}

/// Exact `f̂(s) = φ(s)/φ(0)` for `E = k² > 0`.
pub fn fl_exponential_fhat(rho: f64, vbar: f64, energy: f64, s: f64) -> C64 {
    let (kappa, x) = fourier_params(rho, vbar, energy, s);
    let (x0k, x0) = fourier_params(rho, vbar, energy, 0.0);
    debug_assert_eq!(kappa, x0k);
    whittaker_w(kappa, x).0 / whittaker_w(kappa, x0).0
}

fn fourier_params(rho: f64, vbar: f64, energy: f64, s: f64) -> (C64, C64) {
    let k = energy.sqrt();
    let kappa = C64::new(0.0, -rho / (2.0 * k));
    let x = C64::new(0.0, -2.0 * k / vbar) * C64::new(1.0, vbar * s);
    (kappa, x)
}

/// Exact `(γ₁, 𝒩)` of the Frisch–Lloyd model with exponential weights.
///
/// For `E > 0`, `f̂'(0) = -π𝒩 - iγ₁`; for `E < 0`, `f̃'(0) = -γ₁` and `𝒩 = 0`.
pub fn fl_exponential_gamma1_idos(rho: f64, vbar: f64, energy: f64) -> (f64, f64) {
    if energy > 0.0 {
        let (kappa, x) = fourier_params(rho, vbar, energy, 0.0);
        let (w, dw) = whittaker_w(kappa, x);
        let y = 2.0 * energy.sqrt() * dw / w;
        (-y.im, -y.re / std::f64::consts::PI)
    } else {
        let k = (-energy).sqrt();
        let kappa = C64::new(-rho / (2.0 * k), 0.0);
        let x = C64::new(2.0 * k / vbar, 0.0);
        let (w, dw) = whittaker_w(kappa, x);
        let y = 2.0 * k * dw / w;
        (-y.re, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_zero_is_an_exponential() {
        // W_{0,1/2}(x) = e^{-x/2}.
        let x = C64::new(0.7, -3.0);
        let (w, dw) = whittaker_w(C64::new(0.0, 0.0), x);
        assert!((w - (-0.5 * x).exp()).norm() < 1e-12);
        assert!((dw + 0.5 * w).norm() < 1e-12);
    }

    #[test]
    fn satisfies_the_fourier_equation() {
        let (rho, vbar, energy) = (1.3, 0.4, 2.0);
        let f = |s| fl_exponential_fhat(rho, vbar, energy, s);
        let (s, h) = (0.9, 1e-3);
        let d2 = (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h);
        let pot = C64::new(energy, 0.0) - rho * vbar / C64::new(1.0, vbar * s);
        let res = (d2 - pot * f(s)).norm() / f(s).norm();
        assert!(res < 1e-6, "{res}");
    }

    #[test]
    fn free_limit() {
        let (g, n) = fl_exponential_gamma1_idos(1e-8, 0.5, 4.0);
        assert!(g.abs() < 1e-7 && (n - 2.0 / std::f64::consts::PI).abs() < 1e-7);
        let (g, _) = fl_exponential_gamma1_idos(1e-8, 0.5, -4.0);
        assert!((g - 2.0).abs() < 1e-7);
    }
}
