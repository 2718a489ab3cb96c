use dlc_core::perturbation::{
    binomial, gap_exact_two_layer, nn_first_order, nn_second_order, rf_first_order,
    rf_nn_gap_leading, rf_series,
};
use dlc_core::theory::{epsilon_nn, epsilon_rf};
use dlc_core::{Architecture, Scenario};
use proptest::prelude::*;

fn sc(a: f64, s2: f64, e: f64) -> Scenario {
    Scenario::new(a, s2, e).unwrap()
}

#[test]
fn first_order_examples() {
    let two = Architecture::uniform(10.0, 2).unwrap();
    assert!((rf_first_order(&two, &sc(0.5, 4.0, 0.0)).unwrap() + 0.15).abs() < 1e-15);
    let one = Architecture::uniform(10.0, 1).unwrap();
    assert!((rf_first_order(&one, &sc(0.5, 1.0, 1.0)).unwrap() - 0.05).abs() < 1e-15);
}

#[test]
fn coefficient_examples() {
    let rf = rf_series(10.0, 2, &sc(0.5, 4.0, 0.0), 4).unwrap();
    assert_eq!(rf.coefficients, vec![-6.0, 6.0, 2.0, 2.0]);
    let nn = nn_second_order(10.0, 2, &sc(0.5, 4.0, 0.0)).unwrap();
    assert_eq!(nn.coefficients, vec![-6.0, 5.25]);
}

#[test]
fn full_resummation_example() {
    let s = sc(0.5, 1.0, 0.0);
    let series = rf_series(2.0, 1, &s, 50).unwrap();
    let exact = epsilon_rf(&Architecture::uniform(2.0, 1).unwrap(), &s).epsilon;
    assert!((series.value() - exact).abs() < 1e-12);
}

#[test]
fn nn_truncation_is_third_order() {
    let s = sc(0.5, 4.0, 0.0);
    for ell in [1, 2] {
        let resid = |g: f64| {
            let exact = epsilon_nn(&Architecture::uniform(g, ell).unwrap(), &s).unwrap().epsilon;
            (exact - nn_second_order(g, ell, &s).unwrap().value()).abs()
        };
        let r = resid(100.0) / resid(200.0);
        assert!((r / 8.0 - 1.0).abs() < 0.1, "ell={ell}: ratio {r}");
    }
}

#[test]
fn leading_gap_example() {
    let g = rf_nn_gap_leading(10.0, 1, &sc(0.5, 1.0, 0.0)).unwrap();
    assert!((g - 0.00125).abs() < 1e-15);
}

#[test]
fn exact_gap_example_by_subtraction() {
    let s = sc(0.5, 4.0, 0.0);
    let a = Architecture::uniform(1.0, 1).unwrap();
    let by_difference = epsilon_rf(&a, &s).epsilon - epsilon_nn(&a, &s).unwrap().epsilon;
    let gap = gap_exact_two_layer(1.0, &s).unwrap();
    assert!((gap - by_difference).abs() < 1e-12);
    assert!((gap - 0.133_974_596_215_561_35).abs() < 1e-12);
}

#[test]
fn binomials_match_pascal() {
    let mut row = vec![1.0f64];
    for n in 1..=40usize {
        let mut next = vec![1.0; n + 1];
        for j in 1..n {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
        for (j, c) in row.iter().enumerate() {
            assert_eq!(binomial(n, j), *c, "C({n},{j})");
        }
    }
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (0.05f64..0.95, 0.1f64..100.0, 0.0f64..2.0).prop_map(|(a, s2, e)| sc(a, s2, e))
}

proptest! {
    #[test]
    fn first_orders_agree_exactly(w in prop::collection::vec(1.0f64..50.0, 1..6), s in scenario()) {
        let a = Architecture::new(w).unwrap();
        prop_assert_eq!(rf_first_order(&a, &s).unwrap().to_bits(), nn_first_order(&a, &s).unwrap().to_bits());
    }

    #[test]
    fn resummation_matches_closed_form(ell in 1usize..6, lam in 0.01f64..0.5, s in scenario()) {
        let g = s.alpha() / lam;
        let series = rf_series(g, ell, &s, 60).unwrap().value();
        let exact = epsilon_rf(&Architecture::uniform(g, ell).unwrap(), &s).epsilon;
        prop_assert!((series - exact).abs() <= 1e-10 * exact.abs().max(1.0));
    }

    #[test]
    fn gap_matches_difference_and_is_positive(ratio in 1.05f64..100.0, s in scenario()) {
        let g = s.alpha() * ratio;
        let a = Architecture::uniform(g, 1).unwrap();
        let diff = epsilon_rf(&a, &s).epsilon - epsilon_nn(&a, &s).unwrap().epsilon;
        let gap = gap_exact_two_layer(g, &s).unwrap();
        prop_assert!(gap >= 0.0);
        let scale = epsilon_rf(&a, &s).epsilon.abs().max(1.0);
        prop_assert!((gap - diff).abs() <= 1e-9 * scale, "gap {} diff {}", gap, diff);
    }
}
