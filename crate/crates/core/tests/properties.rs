//! Property tests for the invariants of the weight models, the moment
//! function, the empirical characteristic function and the pool recursion.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use smoothfix::analysis::{estimate_m_monte_carlo, find_alpha, mean_weight_sum, AlphaOptions};
use smoothfix::density::{kde2d, Axis, DensityEstimate, KdeOptions};
use smoothfix::fourier::{ecf, fixed_point_residual};
use smoothfix::model::{Atom, WeightDraw};
use smoothfix::popdyn::{run, RunOptions};
use smoothfix::rng::Domain;
use smoothfix::{Streams, WeightModel};

fn biggins_lambda() -> impl Strategy<Value = Complex64> {
    (0.2f64..2.0, -PI..PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn any_builtin() -> impl Strategy<Value = WeightModel> {
    prop_oneof![
        biggins_lambda().prop_map(|l| WeightModel::biggins(l).unwrap()),
        (3u32..24).prop_map(|b| WeightModel::polya(b).unwrap()),
    ]
}

fn tabular() -> impl Strategy<Value = WeightModel> {
    let atom = (0.1f64..1.0, prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..4));
    prop::collection::vec(atom, 1..4).prop_map(|atoms| {
        let total: f64 = atoms.iter().map(|a| a.0).sum();
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(p, w)| Atom {
                prob: p / total,
                weights: WeightDraw::new(w.into_iter().map(|(a, b)| Complex64::new(a + 1e-3, b))).unwrap(),
            })
            .collect();
        // Make the probabilities sum to one exactly.
        let rest: f64 = atoms[1..].iter().map(|a| a.prob).sum();
        atoms[0].prob = 1.0 - rest;
        WeightModel::tabular(atoms).unwrap()
    })
}

fn small_pool() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0).prop_map(|(a, b)| Complex64::new(a, b)), 2..200)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn monte_carlo_moment_matches_closed_form(model in any_builtin(), s in 0.25f64..3.0, seed in any::<u64>()) {
        let exact = model.m_closed_form(s).unwrap();
        let mc = estimate_m_monte_carlo(&model, s, 20_000, &Streams::new(seed)).unwrap();
        prop_assert!((mc.value - exact).abs() <= 5.0 * mc.stderr + 1e-12,
            "{}: mc {} ± {} vs {}", model.fingerprint(), mc.value, mc.stderr, exact);
    }

    #[test]
    fn weights_sum_to_one_in_mean(model in any_builtin(), seed in any::<u64>()) {
        let mut rng = Streams::new(seed).substream(Domain::Test, 0, 0);
        let (mean, se) = mean_weight_sum(&model, 20_000, &mut rng);
        prop_assert!((mean - 1.0).norm() <= 5.0 * se + 1e-12, "{}: {} ± {}", model.fingerprint(), mean, se);
    }

    #[test]
    fn urn_weights_are_contractions_for_b_at_least_5(b in 5u32..40, seed in any::<u64>()) {
        let model = WeightModel::polya(b).unwrap();
        let mut rng = Streams::new(seed).substream(Domain::Test, 1, 0);
        for _ in 0..500 {
            for t in model.draw_weights(&mut rng).as_slice() {
                prop_assert!(t.norm() <= 1.0);
            }
        }
    }

    #[test]
    fn tabular_moment_is_an_exact_sum(model in tabular(), s in 0.1f64..4.0) {
        let WeightModel::Tabular(t) = &model else { unreachable!() };
        let direct: f64 = t.atoms().iter().map(|a| a.prob * a.weights.as_slice().iter().map(|w| w.norm().powf(s)).sum::<f64>()).sum();
        let m = model.m_closed_form(s).unwrap();
        prop_assert!((m - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn moment_function_is_convex(model in prop_oneof![any_builtin(), tabular()], a in 0.05f64..5.0, b in 0.05f64..5.0) {
        let m = |s: f64| model.m_closed_form(s).unwrap();
        let mid = m(0.5 * (a + b));
        prop_assert!(mid <= 0.5 * (m(a) + m(b)) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn alpha_solves_the_moment_equation(b in 7u32..60) {
        let model = WeightModel::polya(b).unwrap();
        let root = find_alpha(&model, &AlphaOptions::default()).unwrap().unwrap();
        prop_assert!((root.alpha - 1.0 / (2.0 * PI / b as f64).cos()).abs() < 1e-9);
        prop_assert!((root.m_at_alpha - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ecf_is_hermitian_and_bounded(pool in small_pool(), re in -20.0f64..20.0, im in -20.0f64..20.0) {
        let xi = Complex64::new(re, im);
        let plus = ecf(&pool, xi).value;
        let minus = ecf(&pool, -xi).value;
        prop_assert!((plus - minus.conj()).norm() < 1e-12);
        prop_assert!(plus.norm() <= 1.0 + 1e-12);
        prop_assert_eq!(ecf(&pool, Complex64::new(0.0, 0.0)).value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn residual_vanishes_at_the_origin(pool in small_pool(), seed in any::<u64>()) {
        let model = WeightModel::polya(8).unwrap();
        let mut rng = Streams::new(seed).substream(Domain::Test, 2, 0);
        prop_assert_eq!(fixed_point_residual(&pool, &model, Complex64::new(0.0, 0.0), 100, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn pool_recursion_is_linear_in_the_initial_value(
        model in any_builtin(), re in -3.0f64..3.0, im in -3.0f64..3.0, seed in any::<u64>()
    ) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let c = Complex64::new(re, im);
        let base = run(&model, 200, 4, seed, &RunOptions::default()).unwrap();
        let scaled = run(&model, 200, 4, seed, &RunOptions { init: c, ..RunOptions::default() }).unwrap();
        for (a, b) in base.pool.samples().iter().zip(scaled.pool.samples()) {
            prop_assert!((a * c - b).norm() <= 1e-12 * (a * c).norm().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn kde_is_translation_equivariant(dx in -10.0f64..10.0, dy in -10.0f64..10.0, seed in any::<u64>()) {
        let model = WeightModel::polya(8).unwrap();
        let pool = run(&model, 400, 3, seed, &RunOptions::default()).unwrap().pool;
        let shift = Complex64::new(dx, dy);
        let moved: Vec<Complex64> = pool.samples().iter().map(|z| z + shift).collect();
        let (x, y) = (Axis::new(-3.0, 3.0, 40).unwrap(), Axis::new(-3.0, 3.0, 30).unwrap());
        let opts = KdeOptions { x: Some(x), y: Some(y), bandwidth: Some((0.3, 0.25)), nodes: None };
        let moved_opts = KdeOptions {
            x: Some(Axis::new(-3.0 + dx, 3.0 + dx, 40).unwrap()),
            y: Some(Axis::new(-3.0 + dy, 3.0 + dy, 30).unwrap()),
            ..opts
        };
        let (DensityEstimate::Plane(a), DensityEstimate::Plane(b)) =
            (kde2d(pool.samples(), &opts).unwrap(), kde2d(&moved, &moved_opts).unwrap())
        else {
            unreachable!()
        };
        let peak = a.values.iter().cloned().fold(0.0, f64::max);
        for (u, v) in a.values.iter().zip(&b.values) {
            prop_assert!((u - v).abs() <= 1e-9 * peak);
        }
    }
}
