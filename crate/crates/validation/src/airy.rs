// SPDX-License-Identifier: Apache-2.0

//! Airy functions of complex argument and the exact Halperin solution.
//!
//! `φ(s) = Ai(c x) - i Bi(c x)` with `x = -E - iσs/2` and `c = (4/σ²)^{1/3}`
//! solves `φ'' = (E + iσs/2) φ` and is the recessive solution of the
//! Fourier-picture equation for Gaussian white noise `𝓛(s) = σs²/2`.

use num_complex::Complex64 as C64;

const AI0: f64 = 0.355_028_053_887_817_2;
const MINUS_DAI0: f64 = 0.258_819_403_792_806_8;

/// Largest `|z|` for which the Maclaurin series keeps 1e-10 relative accuracy
/// on the combinations used here.
pub const MACLAURIN_RADIUS: f64 = 8.0;

/// `(Ai(z), Ai'(z), Bi(z), Bi'(z))` from the Maclaurin series.
///
/// Returns `None` outside [`MACLAURIN_RADIUS`].
pub fn airy(z: C64) -> Option<(C64, C64, C64, C64)> {
    if z.norm() > MACLAURIN_RADIUS {
        return None;
    }
    // f = Σ 3^k (1/3)_k z^{3k}/(3k)!, g = Σ 3^k (2/3)_k z^{3k+1}/(3k+1)!.
    let z3 = z * z * z;
    let (mut tf, mut tg) = (C64::new(1.0, 0.0), z);
    let (mut f, mut g) = (tf, tg);
    // Derivatives: f' = Σ t_f 3k/z = Σ z^{3k-1}/..., g' = Σ t_g (3k+1)/z.
    let (mut dtf, mut dtg) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let (mut df, mut dg) = (dtf, dtg);
    for k in 1..200 {
        let kf = k as f64;
        tf *= z3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg *= z3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        dtf = if k == 1 {
            z * z / 2.0
        } else {
            dtf * z3 / ((3.0 * kf - 3.0) * (3.0 * kf - 1.0))
        };
        dtg *= z3 / ((3.0 * kf - 2.0) * (3.0 * kf));
        f += tf;
        g += tg;
        df += dtf;
        dg += dtg;
        let scale = f.norm() + g.norm() + df.norm() + dg.norm();
        if tf.norm() + tg.norm() + dtf.norm() + dtg.norm() < 1e-18 * scale {
            break;
        }
    }
    let s3 = 3f64.sqrt();
    let ai = AI0 * f - MINUS_DAI0 * g;
    let dai = AI0 * df - MINUS_DAI0 * dg;
    let bi = s3 * (AI0 * f + MINUS_DAI0 * g);
    let dbi = s3 * (AI0 * df + MINUS_DAI0 * dg);
    Some((ai, dai, bi, dbi))
}

/// `(φ(s), φ'(s))` of the Halperin model, unnormalised.
pub fn halperin_phi(energy: f64, sigma: f64, s: f64) -> Option<(C64, C64)> {
    let c = (4.0 / (sigma * sigma)).cbrt();
    let x = C64::new(-energy, -0.5 * sigma * s);
    let (ai, dai, bi, dbi) = airy(c * x)?;
    let i = C64::i();
    let phi = ai - i * bi;
    // d/ds = (dx/ds) d/dx = (-iσ/2) c d/dz.
    let dphi = (-i * 0.5 * sigma) * c * (dai - i * dbi);
    Some((phi, dphi))
}

/// `f̂(s) = φ(s)/φ(0)`.
pub fn halperin_fhat(energy: f64, sigma: f64, s: f64) -> Option<C64> {
    Some(halperin_phi(energy, sigma, s)?.0 / halperin_phi(energy, sigma, 0.0)?.0)
}

/// `(γ₁, 𝒩)` from `f̂'(0) = -π𝒩 - iγ₁`.
pub fn halperin_gamma1_idos(energy: f64, sigma: f64) -> Option<(f64, f64)> {
    let (phi, dphi) = halperin_phi(energy, sigma, 0.0)?;
    let y = dphi / phi;
    Some((-y.im, -y.re / std::f64::consts::PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Ai(1) = 0.13529241631288141, Bi(1) = 1.2074235949528713,
        // Ai'(1) = -0.15914744129679328, Bi'(1) = 0.93243593339277653.
        let (ai, dai, bi, dbi) = airy(C64::new(1.0, 0.0)).unwrap();
        assert!((ai.re - 0.135_292_416_312_881_41).abs() < 1e-15);
        assert!((bi.re - 1.207_423_594_952_871_3).abs() < 1e-14);
        assert!((dai.re + 0.159_147_441_296_793_28).abs() < 1e-15);
        assert!((dbi.re - 0.932_435_933_392_776_5).abs() < 1e-14);
        // Ai(-5) = 0.35076100902411431.
        assert!((airy(C64::new(-5.0, 0.0)).unwrap().0.re - 0.350_761_009_024_114_3).abs() < 1e-12);
    }

    #[test]
    fn wronskian_is_one_over_pi() {
        for z in [C64::new(0.3, -2.0), C64::new(-4.0, 1.0), C64::new(2.5, 2.5)] {
            let (ai, dai, bi, dbi) = airy(z).unwrap();
            let w = ai * dbi - dai * bi;
            assert!((w - C64::new(std::f64::consts::FRAC_1_PI, 0.0)).norm() < 1e-12, "{z}");
        }
    }

    #[test]
    fn halperin_equation_holds() {
        let (e, sigma, s, h) = (0.7, 1.3, 0.8, 1e-4);
        let f = |s| halperin_phi(e, sigma, s).unwrap().0;
        let d2 = (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h);
        let rhs = C64::new(e, 0.5 * sigma * s) * f(s);
        assert!((d2 - rhs).norm() < 1e-6 * rhs.norm());
    }
}
