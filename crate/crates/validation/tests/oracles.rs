// SPDX-License-Identifier: Apache-2.0

use sl2rmp::closedform::{an_gle, halperin_asymptotic, susy_continuum_lyapunov, weak_disorder_fl};
use sl2rmp::ensembles::{LevyModel, MatrixEnsemble, ParameterLaw};
use sl2rmp::mellin::{invariant_mellin, lyapunov_mellin};
use sl2rmp::montecarlo::{product_cumulants_with, McOptions};
use sl2rmp::spectral::{
    fhat_small_s_check, gamma1, gamma2, gamma2_laplace, idos, report, solve_auto, solve_recessive,
    solve_recessive_laplace, SpectralOptions,
};
use sl2rmp_validation::airy::halperin_gamma1_idos;
use sl2rmp_validation::whittaker::{fl_exponential_fhat, fl_exponential_gamma1_idos};

fn opts() -> SpectralOptions {
    SpectralOptions::default()
}

#[test]
fn whittaker_matches_the_spectral_solver() {
    for (rho, vbar) in [(1.0, 0.01), (1.0, 0.5), (2.0, 1.0), (1.0, 100.0)] {
        let model = LevyModel::compound_poisson(rho, ParameterLaw::exponential(vbar));
        for energy in [-4.0, -1.0, 1.0, 4.0, 9.0] {
            let sol = solve_auto(&model, energy, &opts()).unwrap();
            let (g, n) = fl_exponential_gamma1_idos(rho, vbar, energy);
            let (gs, ns) = (gamma1(&sol), idos(&sol));
            assert!(
                (gs - g).abs() < 1e-7 * g.abs().max(1e-3),
                "ρ={rho} v̄={vbar} E={energy}: γ₁ {gs} vs {g}"
            );
            assert!(
                (ns - n).abs() < 1e-7 * n.abs().max(1e-3),
                "ρ={rho} v̄={vbar} E={energy}: 𝒩 {ns} vs {n}"
            );
            if energy > 0.0 {
                for s in [0.1, 0.7, 2.0] {
                    let exact = fl_exponential_fhat(rho, vbar, energy, s);
                    assert!((sol.fhat(s) - exact).norm() < 1e-6 * exact.norm(), "E={energy} s={s}");
                }
            }
        }
    }
}

#[test]
fn airy_matches_the_spectral_idos_and_lyapunov() {
    for (energy, sigma) in [(-1.0, 1.0), (0.0, 1.0), (1.0, 1.0), (2.0, 2.0)] {
        let sol = solve_recessive(&LevyModel::gaussian_white_noise(sigma), energy, &opts()).unwrap();
        let (g, n) = halperin_gamma1_idos(energy, sigma).unwrap();
        assert!((gamma1(&sol) - g).abs() < 1e-8 * g, "E={energy}");
        assert!((idos(&sol) - n).abs() < 1e-8 * n.max(1e-3), "E={energy}");
    }
}

#[test]
fn small_s_slopes_follow_the_solution() {
    let model = LevyModel::compound_poisson(1.0, ParameterLaw::exponential(0.5));
    let sol = solve_recessive(&model, 2.0, &opts()).unwrap();
    let (n, g) = fhat_small_s_check(&sol).unwrap();
    assert!((n / idos(&sol) - 1.0).abs() < 0.01, "{n} vs {}", idos(&sol));
    assert!((g / gamma1(&sol) - 1.0).abs() < 0.01, "{g} vs {}", gamma1(&sol));
}

#[test]
fn halperin_asymptotics_converge() {
    let sigma = 2.0f64;
    let scale = sigma.powf(2.0 / 3.0);
    let model = LevyModel::gaussian_white_noise(sigma);
    for (mult, tol) in [(50.0, 0.10), (200.0, 0.03)] {
        for sign in [1.0, -1.0] {
            let energy = sign * mult * scale;
            let r = report(&model, energy, &opts()).unwrap();
            let a = halperin_asymptotic(energy, sigma);
            assert!((r.gamma1 / a.gamma1 - 1.0).abs() < tol, "E={energy} γ₁");
            assert!((r.gamma2 / a.gamma2 - 1.0).abs() < tol, "E={energy} γ₂");
        }
    }
}

#[test]
fn dense_frisch_lloyd_reproduces_halperin() {
    // ρ⟨v²⟩ = σ with ρ⟨v⟩ absorbed into the energy.
    let (sigma, rho) = (1.0f64, 100.0);
    let vbar = (sigma / (2.0 * rho)).sqrt();
    let fl = LevyModel::compound_poisson(rho, ParameterLaw::exponential(vbar));
    let h = LevyModel::gaussian_white_noise(sigma);
    for energy in [0.5, 2.0] {
        let a = report(&fl, energy + rho * vbar, &opts()).unwrap();
        let b = report(&h, energy, &opts()).unwrap();
        assert!(
            (a.gamma1 / b.gamma1 - 1.0).abs() < 0.05,
            "E={energy}: {} vs {}",
            a.gamma1,
            b.gamma1
        );
        assert!(
            (a.gamma2 / b.gamma2 - 1.0).abs() < 0.05,
            "E={energy}: {} vs {}",
            a.gamma2,
            b.gamma2
        );
    }
}

#[test]
fn weak_disorder_and_positivity() {
    let (rho, vbar) = (1.0, 0.01);
    let model = LevyModel::compound_poisson(rho, ParameterLaw::exponential(vbar));
    let (g, _) = weak_disorder_fl(100.0, rho, 2.0 * vbar * vbar);
    for energy in [-4.0, -1.0, 0.5, 1.0, 4.0, 100.0] {
        let r = report(&model, energy, &opts()).unwrap();
        assert!(r.gamma2 >= 0.0, "E={energy}");
        let l2 = r.lambda2.unwrap();
        assert!((r.gamma1 / rho).powi(2) - l2 >= -1e-12, "E={energy}");
        if energy == 100.0 {
            assert!((r.gamma1 / g - 1.0).abs() < 0.01);
        }
    }
}

#[test]
fn laplace_and_fourier_routes_agree_for_gamma2() {
    let model = LevyModel::compound_poisson(1.0, ParameterLaw::exponential(0.2));
    let sol = solve_recessive_laplace(&model, -2.0, &opts()).unwrap();
    let (a, b) = (gamma2(&sol).unwrap(), gamma2_laplace(&sol).unwrap());
    assert!((a / b - 1.0).abs() < 1e-8, "{a} vs {b}");
}

#[test]
fn mellin_reaches_the_supersymmetric_continuum() {
    // Dense, weak, same-sign dilations: the discrete chain approaches the
    // continuum with g = ρ⟨w²⟩ and ν = w̄/⟨w²⟩.
    let mut previous = f64::INFINITY;
    for (a, b, rho) in [(-0.15, -0.01, 5.0), (-0.06, -0.004, 30.0), (-0.03, -0.002, 120.0)] {
        let law = ParameterLaw::two_point(a, 0.5, b);
        let m = lyapunov_mellin(&invariant_mellin(law, rho, 1.0, 3).unwrap());
        let c = susy_continuum_lyapunov(&law, rho, 1.0);
        let rel = (m / c - 1.0).abs();
        assert!(rel < 0.05 && rel < previous, "ρ={rho}: {m} vs {c}");
        previous = rel;
    }
}

#[test]
fn an_gle_derivatives_match_simulation() {
    let w_law = ParameterLaw::gaussian(-0.4, 0.3);
    let e = MatrixEnsemble::an(w_law, ParameterLaw::gaussian(0.0, 1.0));
    // Starting from the stationary direction makes the per-step mean unbiased.
    let opts = McOptions {
        burn_in: 50.0,
        ..McOptions::default()
    };
    let mc = product_cumulants_with(&e, 200, 4000, 17, &opts).unwrap();
    let h = 1e-4;
    let l = |q: f64| an_gle(&w_law, q).unwrap();
    let d1 = (l(h) - l(-h)) / (2.0 * h);
    let d2 = (l(h) - 2.0 * l(0.0) + l(-h)) / (h * h);
    assert!(mc.mean_rate.within(d1, 3.0), "{:?} vs {d1}", mc.mean_rate);
    assert!(mc.var_rate.within(d2, 3.0), "{:?} vs {d2}", mc.var_rate);
}
