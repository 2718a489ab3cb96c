use dlc_core::sim::bessel_k_ratio;
use dlc_core::Error;
use proptest::prelude::*;

/// `K_nu(x)` by composite Simpson integration of
/// `int_0^inf exp(-x cosh t) cosh(nu t) dt`, for moderate `nu` and `x`.
fn k_simpson(nu: f64, x: f64) -> f64 {
    let f = |t: f64| (-x * t.cosh()).exp() * (nu * t).cosh();
    let upper = ((60.0 + nu.abs() * 10.0) / x).acosh().max(1.0) + 2.0;
    let n = 200_000;
    let h = upper / n as f64;
    let mut s = f(0.0) + f(upper);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn quadrature_example() {
    let want = k_simpson(8.3, 4.2) / k_simpson(7.3, 4.2);
    let got = bessel_k_ratio(7.3, 4.2).unwrap();
    assert!((got / want - 1.0).abs() < 1e-8, "{got} vs {want}");
}

#[test]
fn quadrature_grid() {
    for nu in [-12.4, -3.5, -0.8, -0.2, 0.0, 0.3, 1.0, 2.7, 9.9, 15.0] {
        for x in [0.3, 0.9, 1.999, 2.0, 2.001, 5.0, 17.0] {
            let want = k_simpson(nu + 1.0, x) / k_simpson(nu, x);
            let got = bessel_k_ratio(nu, x).unwrap();
            assert!((got / want - 1.0).abs() < 1e-8, "nu={nu} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn known_values() {
    // K_{3/2}(x) / K_{1/2}(x) = 1 + 1/x
    for x in [0.01, 0.5, 3.0, 80.0] {
        assert!((bessel_k_ratio(0.5, x).unwrap() - (1.0 + 1.0 / x)).abs() < 1e-12 * (1.0 + 1.0 / x));
    }
    // symmetric orders: K_{1/2} / K_{-1/2} = 1
    assert!((bessel_k_ratio(-0.5, 2.5).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn very_large_orders_stay_finite() {
    for (nu, x) in [(1500.0, 3.0), (-1500.0, 3.0), (400.0, 0.01), (1000.0, 1000.0)] {
        let r = bessel_k_ratio(nu, x).unwrap();
        assert!(r.is_finite() && r > 0.0, "nu={nu} x={x}: {r}");
    }
    // K_{nu+1}/K_nu ~ 2 nu / x for nu >> x
    let r = bessel_k_ratio(5000.0, 2.0).unwrap();
    assert!((r / 5000.0 - 1.0).abs() < 1e-3);
}

#[test]
fn bad_arguments() {
    assert!(matches!(bessel_k_ratio(1.0, 0.0), Err(Error::Domain(_))));
    assert!(matches!(bessel_k_ratio(1.0, -2.0), Err(Error::Domain(_))));
    assert!(matches!(bessel_k_ratio(f64::NAN, 1.0), Err(Error::InvalidParameter(_))));
}

proptest! {
    /// `K_{nu+1} = K_{nu-1} + (2 nu / x) K_nu`, written for the ratio.
    #[test]
    fn recurrence(nu in -40.0f64..40.0, x in 0.05f64..60.0) {
        let r = bessel_k_ratio(nu, x).unwrap();
        let prev = bessel_k_ratio(nu - 1.0, x).unwrap();
        let want = 1.0 / prev + 2.0 * nu / x;
        prop_assert!((r - want).abs() <= 1e-11 * r.abs().max(want.abs()).max(1.0), "{} vs {}", r, want);
    }

    /// `K_{-nu} = K_nu` gives `r(nu) r(-nu-1) = 1`.
    #[test]
    fn reflection(nu in -30.0f64..30.0, x in 0.05f64..60.0) {
        let a = bessel_k_ratio(nu, x).unwrap();
        let b = bessel_k_ratio(-nu - 1.0, x).unwrap();
        prop_assert!((a * b - 1.0).abs() < 1e-12);
    }
}
