use dlc_core::optimal::{
    nn_width_monotonicity, rf_depth_continuation, rf_optimal_depth, rf_optimal_width,
    rf_width_gradient, verify_stationarity, Optimum, Regime,
};
use dlc_core::theory::{epsilon_nn, epsilon_rf};
use dlc_core::{Architecture, Scenario};
use proptest::prelude::*;

fn sc(a: f64, s2: f64, e: f64) -> Scenario {
    Scenario::new(a, s2, e).unwrap()
}

fn width(ell: usize, s: &Scenario) -> f64 {
    match rf_optimal_width(ell, s).unwrap().optimum {
        Some(Optimum::Width(g)) => g,
        other => panic!("no finite optimum: {other:?}"),
    }
}

fn depths(gamma: f64, s: &Scenario) -> Vec<usize> {
    match rf_optimal_depth(gamma, s).unwrap().optimum {
        Some(Optimum::Depth(d)) => d,
        other => panic!("no depth: {other:?}"),
    }
}

#[test]
fn optimal_width_example() {
    assert!((width(1, &sc(0.5, 4.0, 0.0)) - 1.0).abs() < 1e-14);
}

#[test]
fn optimal_depth_example() {
    assert_eq!(depths(1.5, &sc(0.5, 4.0, 0.0)), vec![3]);
}

#[test]
fn integer_ratio_ties() {
    // ln 4 / ln 2 = 2 at gamma = 1, alpha = 0.5, sigma~^2 = 4
    assert_eq!(depths(1.0, &sc(0.5, 4.0, 0.0)), vec![1, 2]);
    // gamma = t alpha / (t - 1), t = sigma~^(2/j), puts the ratio at j
    for j in 1..=6 {
        let t = 9f64.powf(1.0 / j as f64);
        assert_eq!(depths(t * 0.3 / (t - 1.0), &sc(0.3, 9.0, 0.0)), vec![j - 1, j]);
    }
}

#[test]
fn shallow_wins_without_amplified_prior() {
    for s in [sc(0.5, 1.0, 0.0), sc(0.5, 0.3, 0.2), sc(0.2, 1.2, 0.5)] {
        let r = rf_optimal_depth(2.0, &s).unwrap();
        assert_eq!(r.regime, Regime::ShallowerAlwaysBetter);
        assert_eq!(r.optimum, Some(Optimum::Depth(vec![0])));
    }
}

#[test]
fn nn_width_regimes() {
    assert_eq!(nn_width_monotonicity(&sc(0.5, 1.0, 0.0)).unwrap().regime, Regime::WidthIrrelevant);
    assert_eq!(nn_width_monotonicity(&sc(0.5, 0.25, 0.0)).unwrap().regime, Regime::WiderAlwaysBetter);
    assert_eq!(nn_width_monotonicity(&sc(0.5, 4.0, 0.0)).unwrap().regime, Regime::NarrowerAlwaysBetter);
}

#[test]
fn nn_width_has_no_effect_at_unit_prior() {
    let s = sc(0.5, 1.0, 0.0);
    let base = epsilon_nn(&Architecture::uniform(0.6, 2).unwrap(), &s).unwrap().epsilon;
    for g in [1.0, 5.0, 100.0] {
        let e = epsilon_nn(&Architecture::uniform(g, 2).unwrap(), &s).unwrap().epsilon;
        assert!((e - base).abs() < 1e-12);
    }
}

#[test]
fn single_layer_hessian() {
    let r = verify_stationarity(1, &sc(0.5, 4.0, 0.0)).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.eigenvalues.len(), 1);
    assert!((r.eigenvalues[0] / (2.0 * r.lambda) - 1.0).abs() < 1e-3);
}

#[test]
fn three_layer_multiplicities() {
    let r = verify_stationarity(3, &sc(0.5, 4.0, 0.0)).unwrap();
    assert!(r.passed(), "{r:?}");
    let small = r.eigenvalues.iter().filter(|e| (*e / r.lambda - 1.0).abs() < 1e-3).count();
    let large = r.eigenvalues.iter().filter(|e| (*e / (4.0 * r.lambda) - 1.0).abs() < 1e-3).count();
    assert_eq!((small, large), (2, 1));
}

#[test]
fn gradient_positive_beyond_optimum() {
    let s = sc(0.5, 4.0, 0.0);
    for ell in [1, 2, 4] {
        let g = 2.0 * width(ell, &s);
        let grad = rf_width_gradient(&Architecture::uniform(g, ell).unwrap(), &s, 1e-5 * g).unwrap();
        assert!(grad.iter().all(|x| *x > 0.0), "{grad:?}");
    }
}

#[test]
fn stationarity_needs_finite_optimum() {
    assert!(verify_stationarity(2, &sc(0.5, 1.0, 0.0)).is_err());
}

proptest! {
    #[test]
    fn optimal_width_beats_neighbours(ell in 1usize..6, a in 0.05f64..0.95, st2 in 1.2f64..50.0, k in 0.9f64..1.1) {
        let s = sc(a, st2, 0.0);
        let g = width(ell, &s);
        let f = |x: f64| epsilon_rf(&Architecture::uniform(x, ell).unwrap(), &s).epsilon;
        prop_assume!(g * k > a * 1.001);
        prop_assert!(f(g) <= f(g * k) + 1e-12 * f(g));
    }

    #[test]
    fn continuation_matches_integer_depths(ell in 1usize..8, a in 0.05f64..0.95, ratio in 1.05f64..20.0, s2 in 0.1f64..20.0, e in 0.0f64..1.0) {
        let s = sc(a, s2, e);
        let g = a * ratio;
        let cont = rf_depth_continuation(g, ell as f64, &s).unwrap();
        let direct = epsilon_rf(&Architecture::uniform(g, ell).unwrap(), &s).epsilon;
        prop_assert!((cont - direct).abs() <= 1e-11 * direct.abs().max(1.0));
    }

    #[test]
    fn reported_depth_is_the_integer_argmin(a in 0.05f64..0.95, ratio in 1.05f64..20.0, s2 in 0.1f64..50.0, e in 0.0f64..1.0) {
        let s = sc(a, s2, e);
        let g = a * ratio;
        let best = depths(g, &s);
        let f = |l: usize| rf_depth_continuation(g, l as f64, &s).unwrap();
        let fbest = f(best[0]);
        for l in 0..=60 {
            prop_assert!(f(l) >= fbest - 1e-10 * fbest.abs(), "depth {} beats {:?}", l, best);
        }
    }
}
