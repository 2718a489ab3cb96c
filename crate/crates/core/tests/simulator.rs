use dlc_core::perturbation::nn_first_order;
use dlc_core::sim::{
    inverse_wishart_trace, realized_width, regime, simulate_gap_two_layer, simulate_lr_error,
    simulate_nn_error_two_layer, simulate_rf_error, Regime, Seeds, SimEstimate,
};
use dlc_core::theory::{epsilon_lr, epsilon_nn, epsilon_rf};
use dlc_core::{Architecture, Error, Scenario};

const SEED: u64 = 1;

fn sc(a: f64, s2: f64, e: f64) -> Scenario {
    Scenario::new(a, s2, e).unwrap()
}

fn assert_within(est: &SimEstimate, theory: f64, k: f64) {
    let dev = (est.mean - theory).abs();
    assert!(dev <= k * est.se + 1e-12, "mean {} +- {} vs {theory}", est.mean, est.se);
}

#[test]
fn lr_matches_theory() {
    let s = sc(0.5, 1.0, 0.5);
    let est = simulate_lr_error(100, 50, &s, 10, SEED).unwrap();
    assert_within(&est, epsilon_lr(&s).epsilon, 3.0);
    assert!((epsilon_lr(&s).epsilon - 1.25).abs() < 1e-12);
}

#[test]
fn lr_without_noise_above_threshold_is_exact() {
    let s = sc(2.0, 1.0, 0.0);
    let est = simulate_lr_error(50, 100, &s, 4, SEED).unwrap();
    assert!(est.mean.abs() < 1e-12);
}

#[test]
fn rf_matches_theory() {
    let s = sc(0.5, 1.0, 0.0);
    let est = simulate_rf_error(&[100], 100, 50, &s, 10, SEED).unwrap();
    assert_within(&est, epsilon_rf(&Architecture::uniform(1.0, 1).unwrap(), &s).epsilon, 3.0);
}

#[test]
fn nn_matches_theory() {
    let s = sc(0.5, 1.0, 0.0);
    let est = simulate_nn_error_two_layer(100, 100, 50, &s, 10, SEED).unwrap();
    assert_within(&est, 1.0, 3.0);

    let s = sc(0.5, 4.0, 0.0);
    let theory = epsilon_nn(&Architecture::uniform(1.0, 1).unwrap(), &s).unwrap().epsilon;
    assert!((theory - 1.866_025_403_784_438_6).abs() < 1e-12);
    // at d = 100 the mean sits about 1% above the limit, several standard
    // errors at this prior; the offset shrinks with d
    let est = simulate_nn_error_two_layer(400, 400, 200, &s, 10, SEED).unwrap();
    assert_within(&est, theory, 3.0);
}

#[test]
fn wide_nn_matches_first_order() {
    let s = sc(0.5, 4.0, 0.0);
    let first = nn_first_order(&Architecture::uniform(40.0, 1).unwrap(), &s).unwrap();
    let theory = epsilon_lr(&s).epsilon + first;
    let est = simulate_nn_error_two_layer(4000, 100, 50, &s, 10, SEED).unwrap();
    assert_within(&est, theory, 3.0);
}

#[test]
fn inverse_wishart_mean() {
    let est = inverse_wishart_trace(100, 50, 20, SEED).unwrap();
    assert_within(&est, 50.0 / 49.0, 3.0);
}

#[test]
fn paired_gap_is_positive_on_average() {
    let s = sc(0.5, 4.0, 0.0);
    let est = simulate_gap_two_layer(100, 100, 50, &s, 20, SEED).unwrap();
    assert!(est.mean > -2.0 * est.se, "{} +- {}", est.mean, est.se);
}

#[test]
fn regimes() {
    assert_eq!(regime(100, 50, &[]).unwrap(), Regime::Conditioned);
    assert_eq!(regime(100, 150, &[]).unwrap(), Regime::OverDetermined);
    assert_eq!(regime(100, 80, &[50]).unwrap(), Regime::Bottleneck);
    // p = d is fine when a narrower layer sets the rank
    assert_eq!(regime(100, 100, &[50]).unwrap(), Regime::Bottleneck);
    assert!(matches!(regime(100, 100, &[]), Err(Error::RegimeAmbiguous(_))));
    assert!(matches!(regime(100, 50, &[50, 200]), Err(Error::RegimeAmbiguous(_))));
    let s = sc(1.0, 1.0, 0.0);
    assert!(matches!(simulate_rf_error(&[200], 100, 100, &s, 3, SEED), Err(Error::RegimeAmbiguous(_))));
}

#[test]
fn size_errors() {
    let s = sc(0.5, 1.0, 0.0);
    assert!(matches!(simulate_lr_error(100, 50, &s, 1, SEED), Err(Error::InvalidParameter(_))));
    assert!(matches!(simulate_rf_error(&[], 100, 50, &s, 3, SEED), Err(Error::InvalidParameter(_))));
    assert!(matches!(simulate_nn_error_two_layer(50, 100, 120, &s, 3, SEED), Err(Error::Domain(_))));
}

#[test]
fn same_seed_same_replicates_any_pool() {
    let s = sc(0.3, 2.0, 0.5);
    let a = simulate_rf_error(&[60, 150], 50, 20, &s, 6, SEED).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| simulate_rf_error(&[60, 150], 50, 20, &s, 6, SEED).unwrap());
    assert_eq!(a, b);
    let c = simulate_rf_error(&[60, 150], 50, 20, &s, 6, SEED + 1).unwrap();
    assert_ne!(a.mean, c.mean);
}

#[test]
fn redrawing_the_teacher_leaves_means_consistent() {
    let s = sc(0.5, 1.0, 0.0);
    let one = simulate_rf_error(&[100], 100, 50, &s, 20, Seeds { base: SEED, teacher: SEED }).unwrap();
    let two = simulate_rf_error(&[100], 100, 50, &s, 20, Seeds { base: SEED, teacher: 99 }).unwrap();
    assert_ne!(one.replicates[0].bias, two.replicates[0].bias);
    // inputs and features are shared, so only the bias moves
    let combined = (one.se.powi(2) + two.se.powi(2)).sqrt();
    assert!((one.mean - two.mean).abs() < 3.0 * combined);
}

#[test]
fn rounding_of_widths() {
    assert_eq!(realized_width(0.504, 100), 50);
    assert_eq!(realized_width(0.505, 100), 51);
    assert_eq!(realized_width(1e-4, 100), 1);
}
