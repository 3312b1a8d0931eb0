// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use rand::Rng;
use sl2rmp::closedform::{an_exact_eigenpair, an_simple_spec, eigen_residual};
use sl2rmp::ensembles::{LevyModel, MatrixEnsemble, ParameterLaw};
use sl2rmp::mellin::{invariant_mellin, lyapunov_mellin, miller_backward};
use sl2rmp::montecarlo::replica_rng;

fn weight_law() -> impl Strategy<Value = ParameterLaw> {
    prop_oneof![
        (0.01..5.0f64).prop_map(ParameterLaw::exponential),
        (-2.0..2.0f64).prop_map(ParameterLaw::dirac),
        (-1.0..1.0f64, 0.01..2.0f64).prop_map(|(m, v)| ParameterLaw::gaussian(m, v)),
        (-2.0..2.0f64, 0.05..0.95f64, -2.0..2.0f64).prop_map(|(a, p, b)| ParameterLaw::two_point(a, p, b)),
    ]
}

fn nonpositive_law() -> impl Strategy<Value = ParameterLaw> {
    prop_oneof![
        (-0.8..-0.01f64).prop_map(ParameterLaw::dirac),
        (-0.8..0.0f64, 0.1..0.9f64, -0.8..-0.01f64).prop_map(|(a, p, b)| ParameterLaw::two_point(a, p, b)),
        (-0.5..-0.01f64, 0.1..0.9f64, -0.5..-0.2f64).prop_map(|(a, p, b)| ParameterLaw::two_point(a, p, b)),
    ]
}

proptest! {
    #[test]
    fn levy_exponent_is_conjugation_symmetric(rho in 0.1..10.0f64, law in weight_law(), s in -50.0..50.0f64) {
        let m = LevyModel::compound_poisson(rho, law);
        let (a, b) = (m.levy(s), m.levy(-s));
        prop_assert!((a - b.conj()).norm() < 1e-14 * (1.0 + a.norm()));
        prop_assert!(a.re >= -1e-15);
    }

    #[test]
    fn parameter_streams_are_seed_deterministic(seed in any::<u64>(), law in weight_law()) {
        let e = MatrixEnsemble::frisch_lloyd(1.0, 1.0, law).unwrap();
        let draw = |seed| {
            let mut rng = replica_rng(seed, 3);
            (0..16).map(|_| e.sample_params(&mut rng)).collect::<Vec<_>>()
        };
        prop_assert_eq!(draw(seed), draw(seed));
        let mut rng = replica_rng(seed, 0);
        let a: f64 = rng.gen();
        let mut rng = replica_rng(seed, 1);
        prop_assert_ne!(a, rng.gen::<f64>());
    }

    #[test]
    fn mellin_minimal_solution_is_seed_independent(law in nonpositive_law(), rho in 0.3..3.0f64, k in 0.3..3.0f64, seed in -30.0..30.0f64) {
        let window = 3;
        let a = miller_backward(law, rho, k, window, 4000, 1.0).unwrap();
        let b = miller_backward(law, rho, k, window, 4000, seed.exp2()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10 * x.abs(), "{x} vs {y}");
        }
        let sol = invariant_mellin(law, rho, k, window).unwrap();
        for s in -(window - 1)..window {
            prop_assert!(sol.recurrence_residual(s).unwrap() < 1e-11);
        }
        prop_assert!(lyapunov_mellin(&sol) > 0.0);
    }

    #[test]
    fn mellin_reflection(law in nonpositive_law(), rho in 0.3..3.0f64, k in 0.3..3.0f64) {
        // Z → k²/Z maps the law of w to that of -w.
        let a = invariant_mellin(law, rho, k, 3).unwrap();
        let b = invariant_mellin(law.negated(), rho, k, 3).unwrap();
        for s in -3..=3 {
            let lhs = b.get(s);
            let rhs = k.powi(2 * s as i32) * a.get(-s);
            prop_assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());
        }
        prop_assert!((lyapunov_mellin(&a) - lyapunov_mellin(&b)).abs() < 1e-12 * lyapunov_mellin(&a));
    }

    #[test]
    fn an_eigenpair_annihilates_the_continuum_operator(wbar in -2.0..-0.01f64, q in -3.0..3.0f64, z in -30.0..30.0f64) {
        let spec = an_simple_spec(wbar);
        let (f, df, d2f, l) = an_exact_eigenpair(wbar, q, z);
        prop_assert!(eigen_residual(&spec, q, z, (f, df, d2f), l) < 1e-10);
    }
}

#[test]
fn an_continuum_gle_has_slope_minus_wbar() {
    // Λ̃(q) = -q w̄ + q²/8 so that γ₁ = Λ̃'(0) = -w̄ and γ₂ = Λ̃''(0) = 1/4.
    let wbar = -0.37;
    let h = 1e-4;
    let l = |q: f64| an_exact_eigenpair(wbar, q, 0.0).3;
    assert!(((l(h) - l(-h)) / (2.0 * h) + wbar).abs() < 1e-12);
    assert!(((l(h) + l(-h) - 2.0 * l(0.0)) / (h * h) - 0.25).abs() < 1e-6);
}
