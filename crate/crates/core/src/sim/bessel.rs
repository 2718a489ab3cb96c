//! Ratio `K_{nu+1}(x) / K_nu(x)` of modified Bessel functions of the second
//! kind.
//!
//! The order is split as `nu = mu + n` with `|mu| <= 1/2`. The ratio at `mu`
//! comes from Temme's series for `x < 2` and from Steed's continued fraction
//! otherwise; the ratio recurrence `r_{m} = 2m/x + 1/r_{m-1}` then carries it
//! up to `nu`. Only ratios are ever formed, so nothing overflows however
//! large the order.

use crate::error::{Error, Result};

/// Largest supported `|nu|`.
pub const MAX_ORDER: f64 = 1e6;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;

/// Taylor coefficients of `1 / Gamma(1 + x)` about zero.
const RGAMMA: [f64; 27] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_9,
    -0.042_002_635_034_095_24,
    0.166_538_611_382_291_48,
    -0.042_197_734_555_544_33,
    -0.009_621_971_527_876_973,
    0.007_218_943_246_663_1,
    -0.001_165_167_591_859_065_2,
    -0.000_215_241_674_114_950_98,
    0.000_128_050_282_388_116_2,
    -0.000_020_134_854_780_788_24,
    -1.250_493_482_142_670_6e-6,
    1.133_027_231_981_696e-6,
    -2.056_338_416_977_607e-7,
    6.116_095_104_481_416e-9,
    5.002_007_644_469_223e-9,
    -1.181_274_570_487_02e-9,
    1.043_426_711_691_100_5e-10,
    7.782_263_439_905_071e-12,
    -3.696_805_618_642_206e-12,
    5.100_370_287_454_476e-13,
    -2.058_326_053_566_506_6e-14,
    -5.348_122_539_423_018e-15,
    1.226_778_628_238_260_8e-15,
    -1.181_259_301_697_458_8e-16,
    1.186_692_254_751_600_4e-18,
];

/// `(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))` with
/// `gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)` and
/// `gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2`, free of cancellation at
/// small `mu`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let m2 = mu * mu;
    let even = RGAMMA.iter().step_by(2).rev().fold(0.0, |acc, c| acc * m2 + c);
    let odd = RGAMMA.iter().skip(1).step_by(2).rev().fold(0.0, |acc, c| acc * m2 + c);
    (-odd, even, even + mu * odd, even - mu * odd)
}

/// `K_{mu+1}(x) / K_mu(x)` by Temme's series, `|mu| <= 1/2`, small `x`.
fn ratio_temme(mu: f64, x: f64) -> f64 {
    let x2 = 0.5 * x;
    let pimu = std::f64::consts::PI * mu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);

    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu * mu);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum1 * (2.0 / x) / sum
}

/// `K_{mu+1}(x) / K_mu(x)` by Steed's continued fraction, `|mu| <= 1/2`.
fn ratio_steed(mu: f64, x: f64) -> f64 {
    let a1 = 0.25 - mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut a = -a1;
    for i in 2..MAX_ITER {
        a -= 2.0 * (i - 1) as f64;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        if delh.abs() < EPS * h.abs() {
            break;
        }
    }
    (mu + x + 0.5 - a1 * h) / x
}

fn ratio_base(mu: f64, x: f64) -> f64 {
    if x < 2.0 {
        ratio_temme(mu, x)
    } else {
        ratio_steed(mu, x)
    }
}

/// `K_{nu+1}(x) / K_nu(x)` for real `nu` and `x > 0`.
pub fn bessel_k_ratio(nu: f64, x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain(format!("Bessel argument must be positive, got {x}")));
    }
    if !(nu.is_finite() && nu.abs() <= MAX_ORDER) {
        return Err(Error::invalid(format!("Bessel order out of range: {nu}")));
    }
    Ok(ratio_unchecked(nu, x))
}

fn ratio_unchecked(nu: f64, x: f64) -> f64 {
    if nu < -0.5 {
        // K_{-v} = K_v turns the ratio at nu into the inverse ratio at -nu-1
        return 1.0 / ratio_unchecked(-nu - 1.0, x);
    }
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let mut r = ratio_base(mu, x);
    for k in 1..=n as usize {
        r = 2.0 * (mu + k as f64) / x + 1.0 / r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn half_integer_orders() {
        for x in [0.05, 0.3, 1.0, 1.99, 2.0, 2.5, 10.0, 80.0] {
            assert!(rel(bessel_k_ratio(0.5, x).unwrap(), 1.0 + 1.0 / x) < 1e-13, "{x}");
            let k52 = 1.0 + 3.0 / x + 3.0 / (x * x);
            assert!(rel(bessel_k_ratio(1.5, x).unwrap(), k52 / (1.0 + 1.0 / x)) < 1e-13);
            assert!(rel(bessel_k_ratio(-0.5, x).unwrap(), 1.0) < 1e-13);
            assert!(rel(bessel_k_ratio(-1.5, x).unwrap(), x / (x + 1.0)) < 1e-13);
        }
        assert!((2.0 * bessel_k_ratio(0.5, 2.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((bessel_k_ratio(0.5, 10.0).unwrap() - 1.1).abs() < 1e-14);
    }

    #[test]
    fn integer_orders_match_known_values() {
        // K_1(1) / K_0(1) and K_1(3) / K_0(3)
        assert!(rel(bessel_k_ratio(0.0, 1.0).unwrap(), 1.429_625_398_260_401_8) < 1e-13);
        assert!(rel(bessel_k_ratio(0.0, 3.0).unwrap(), 1.155_929_879_761_163_5) < 1e-13);
    }

    #[test]
    fn continuous_across_method_switch() {
        for nu in [0.0, 0.3, -0.4, 3.7] {
            let lo = bessel_k_ratio(nu, 2.0 - 1e-12).unwrap();
            let hi = bessel_k_ratio(nu, 2.0).unwrap();
            assert!(rel(lo, hi) < 1e-11, "{nu}: {lo} {hi}");
        }
    }

    #[test]
    fn huge_orders_stay_finite() {
        let r = bessel_k_ratio(1e6, 50.0).unwrap();
        assert!(r.is_finite() && r > 1.0);
        // large-order asymptote (nu + sqrt(nu^2 + x^2)) / x
        let r = bessel_k_ratio(5e4, 3e4).unwrap();
        let asym = (5e4 + (5e4f64.powi(2) + 9e8).sqrt()) / 3e4;
        assert!(rel(r, asym) < 1e-4);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(bessel_k_ratio(1.0, 0.0), Err(Error::Domain(_))));
        assert!(bessel_k_ratio(1.0, -1.0).is_err());
        assert!(bessel_k_ratio(2e6, 1.0).is_err());
    }
}
