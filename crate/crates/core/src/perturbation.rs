//! Large-width expansions of the RF and NN learning curves in
//! `lambda = alpha / gamma`, and the gap between the two models.
//!
//! Every correction carries the common factor `1 - alpha + eta^2`. For equal
//! widths the RF curve is a polynomial in `lambda` plus a geometric series,
//! so its expansion is known to all orders; the NN expansion is given to
//! second order. Unequal widths are handled at first order only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sigma_tilde, Architecture, Scenario};
use crate::theory::epsilon_lr;

/// Truncated expansion `base + scale * sum_j c_j lambda^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesExpansion {
    /// Infinite-width (LR) error.
    pub base: f64,
    /// `alpha / gamma`.
    pub lambda: f64,
    /// `c_1, c_2, ...`.
    pub coefficients: Vec<f64>,
    /// `1 - alpha + eta^2`.
    pub scale: f64,
}

impl SeriesExpansion {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// `sum_j c_j lambda^j` by Horner's scheme.
    pub fn correction(&self) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| (acc + c) * self.lambda)
    }

    pub fn value(&self) -> f64 {
        self.base + self.scale * self.correction()
    }
}

/// Binomial coefficient by multiplicative recurrence; zero for `j > n`.
pub fn binomial(n: usize, j: usize) -> f64 {
    if j > n {
        return 0.0;
    }
    let j = j.min(n - j);
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn under_sampled(s: &Scenario) -> Result<()> {
    if s.alpha() >= 1.0 {
        return Err(Error::domain(format!(
            "large-width expansion needs alpha < 1, got {}",
            s.alpha()
        )));
    }
    Ok(())
}

fn below_width(gamma: f64, s: &Scenario) -> Result<()> {
    under_sampled(s)?;
    if !(gamma.is_finite() && gamma > s.alpha()) {
        return Err(Error::domain(format!(
            "expansion needs alpha < gamma, got alpha {} and gamma {gamma}",
            s.alpha()
        )));
    }
    Ok(())
}

fn check_depth(ell: usize) -> Result<()> {
    if ell == 0 {
        return Err(Error::invalid("depth must be at least one"));
    }
    Ok(())
}

/// Shared first-order coefficient per unit `lambda` and per layer: the RF
/// and NN expansions agree at this order, and both go through here.
fn first_order_per_layer(st2: f64) -> f64 {
    1.0 - st2
}

/// First-order finite-width correction to the RF curve,
/// `[(1 - alpha)(1 - sigma2) + eta^2] * sum_l alpha / gamma_l`.
pub fn rf_first_order(arch: &Architecture, s: &Scenario) -> Result<f64> {
    under_sampled(s)?;
    let st2 = sigma_tilde(s)?.value();
    let lam: f64 = arch.sorted_widths().iter().map(|g| s.alpha() / g).sum();
    Ok(first_order_per_layer(st2) * s.noise_scale() * lam)
}

/// First-order finite-width correction to the NN curve. Identical to
/// [`rf_first_order`].
pub fn nn_first_order(arch: &Architecture, s: &Scenario) -> Result<f64> {
    rf_first_order(arch, s)
}

/// RF expansion for `ell` layers of equal width `gamma`, to `order`:
/// `c_j = (-1)^j sigma~^2 C(ell, j) + ell`.
pub fn rf_series(gamma: f64, ell: usize, s: &Scenario, order: usize) -> Result<SeriesExpansion> {
    below_width(gamma, s)?;
    check_depth(ell)?;
    if order == 0 {
        return Err(Error::invalid("series order must be at least one"));
    }
    let st2 = sigma_tilde(s)?.value();
    let l = ell as f64;
    let coefficients = (1..=order)
        .map(|j| match j {
            1 => first_order_per_layer(st2) * l,
            _ => {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * st2 * binomial(ell, j) + l
            }
        })
        .collect();
    Ok(SeriesExpansion {
        base: epsilon_lr(s).epsilon,
        lambda: s.alpha() / gamma,
        coefficients,
        scale: s.noise_scale(),
    })
}

/// NN expansion for `ell` layers of equal width `gamma`, to second order.
pub fn nn_second_order(gamma: f64, ell: usize, s: &Scenario) -> Result<SeriesExpansion> {
    under_sampled(s)?;
    check_depth(ell)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(format!("width must be positive, got {gamma}")));
    }
    let st2 = sigma_tilde(s)?.value();
    let l = ell as f64;
    let c1 = first_order_per_layer(st2) * l;
    let c2 = l * (l - 1.0) * st2 / 2.0 - l * (l + 1.0) / (2.0 * st2) + l;
    Ok(SeriesExpansion {
        base: epsilon_lr(s).epsilon,
        lambda: s.alpha() / gamma,
        coefficients: vec![c1, c2],
        scale: s.noise_scale(),
    })
}

/// Leading term of `eps_RF - eps_NN` for equal widths,
/// `(1 - alpha + eta^2) ell (ell + 1) / (2 sigma~^2) * lambda^2`.
pub fn rf_nn_gap_leading(gamma: f64, ell: usize, s: &Scenario) -> Result<f64> {
    below_width(gamma, s)?;
    check_depth(ell)?;
    let st2 = sigma_tilde(s)?.value();
    let l = ell as f64;
    let lam = s.alpha() / gamma;
    Ok(s.noise_scale() * l * (l + 1.0) / (2.0 * st2) * lam * lam)
}

/// Exact `eps_RF - eps_NN` for a single hidden layer of width `gamma1`.
///
/// With `psi = 1 - lambda` and `R = sqrt(psi^2 + 4 lambda / sigma~^2)` the
/// gap is `4 S lambda^2 / (sigma~^2 psi (psi + R)^2)`, which is manifestly
/// non-negative and free of cancellation as `lambda -> 0`.
pub fn gap_exact_two_layer(gamma1: f64, s: &Scenario) -> Result<f64> {
    below_width(gamma1, s)?;
    let st2 = sigma_tilde(s)?.value();
    let lam = s.alpha() / gamma1;
    let psi = (gamma1 - s.alpha()) / gamma1;
    let r = (psi * psi + 4.0 * lam / st2).sqrt();
    Ok(4.0 * s.noise_scale() * lam * lam / (st2 * psi * (psi + r) * (psi + r)))
}
