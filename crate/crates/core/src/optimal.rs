//! Optimal width and depth of RF models, the NN width monotonicity, and a
//! finite-difference check of the RF optimum.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{sigma_tilde, Architecture, Scenario};
use crate::theory::{epsilon_lr, epsilon_rf};

/// Relative distance of the depth ratio from an integer below which two
/// depths are reported as tied.
pub const DEPTH_TIE_RTOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    WiderAlwaysBetter,
    WidthIrrelevant,
    FiniteOptimum,
    NarrowerAlwaysBetter,
    /// Adding layers never helps; the optimal depth is zero.
    ShallowerAlwaysBetter,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::WiderAlwaysBetter => "wider_always_better",
            Regime::WidthIrrelevant => "width_irrelevant",
            Regime::FiniteOptimum => "finite_optimum",
            Regime::NarrowerAlwaysBetter => "narrower_always_better",
            Regime::ShallowerAlwaysBetter => "shallower_always_better",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimum {
    Width(f64),
    /// One depth, or two adjacent depths with identical error.
    Depth(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthRegimeReport {
    pub regime: Regime,
    pub optimum: Option<Optimum>,
    /// Rescaled prior variance used for the classification.
    pub sigma_tilde: f64,
}

fn check_depth(ell: usize) -> Result<()> {
    if ell == 0 {
        return Err(Error::invalid("depth must be at least one"));
    }
    Ok(())
}

/// `gamma* = t alpha / (t - 1)` with `t = sigma~^(2/(ell+1))`.
fn gamma_star(st2: f64, ell: usize, alpha: f64) -> f64 {
    let log_t = st2.ln() / (ell as f64 + 1.0);
    log_t.exp() * alpha / log_t.exp_m1()
}

/// Optimal common width of an RF model with `ell` hidden layers.
pub fn rf_optimal_width(ell: usize, s: &Scenario) -> Result<WidthRegimeReport> {
    check_depth(ell)?;
    let st = sigma_tilde(s)?;
    let st2 = st.value();
    Ok(match st.cmp_one() {
        Ordering::Greater => WidthRegimeReport {
            regime: Regime::FiniteOptimum,
            optimum: Some(Optimum::Width(gamma_star(st2, ell, s.alpha()))),
            sigma_tilde: st2,
        },
        _ => WidthRegimeReport { regime: Regime::WiderAlwaysBetter, optimum: None, sigma_tilde: st2 },
    })
}

/// Optimal depth of an RF model whose layers all have width `gamma`.
///
/// With `sigma~ > 1` this is `floor(ln sigma~^2 / ln(gamma / (gamma - alpha)))`;
/// when that ratio is a positive integer `j`, depths `j - 1` and `j` tie.
pub fn rf_optimal_depth(gamma: f64, s: &Scenario) -> Result<WidthRegimeReport> {
    let st = sigma_tilde(s)?;
    let alpha = s.alpha();
    if !(gamma.is_finite() && gamma > alpha) {
        return Err(Error::domain(format!(
            "optimal depth needs alpha < gamma, got alpha {alpha} and gamma {gamma}"
        )));
    }
    let st2 = st.value();
    if st.cmp_one() != Ordering::Greater {
        return Ok(WidthRegimeReport {
            regime: Regime::ShallowerAlwaysBetter,
            optimum: Some(Optimum::Depth(vec![0])),
            sigma_tilde: st2,
        });
    }
    let ratio = st2.ln() / -(-alpha / gamma).ln_1p();
    let j = ratio.round();
    let depths = if j >= 1.0 && (ratio - j).abs() <= DEPTH_TIE_RTOL * ratio {
        vec![j as usize - 1, j as usize]
    } else {
        vec![ratio.floor() as usize]
    };
    Ok(WidthRegimeReport {
        regime: Regime::FiniteOptimum,
        optimum: Some(Optimum::Depth(depths)),
        sigma_tilde: st2,
    })
}

/// Sign of the derivative of the NN error with respect to any width.
pub fn nn_width_monotonicity(s: &Scenario) -> Result<WidthRegimeReport> {
    let st = sigma_tilde(s)?;
    let regime = match st.cmp_one() {
        Ordering::Less => Regime::WiderAlwaysBetter,
        Ordering::Equal => Regime::WidthIrrelevant,
        Ordering::Greater => Regime::NarrowerAlwaysBetter,
    };
    Ok(WidthRegimeReport { regime, optimum: None, sigma_tilde: st.value() })
}

/// RF error with `ell` equal layers of width `gamma`, continued to real
/// `ell`: `eps_LR + S [sigma~^2 (psi^ell - 1) + ell (1/psi - 1)]`,
/// `psi = (gamma - alpha) / gamma`.
pub fn rf_depth_continuation(gamma: f64, ell: f64, s: &Scenario) -> Result<f64> {
    let st2 = sigma_tilde(s)?.value();
    let alpha = s.alpha();
    if !(gamma.is_finite() && gamma > alpha) {
        return Err(Error::domain(format!(
            "continuation needs alpha < gamma, got alpha {alpha} and gamma {gamma}"
        )));
    }
    if !(ell.is_finite() && ell >= 0.0) {
        return Err(Error::invalid(format!("depth must be non-negative, got {ell}")));
    }
    let psi = (gamma - alpha) / gamma;
    let corr = st2 * (psi.powf(ell) - 1.0) + ell * alpha / (gamma - alpha);
    Ok(epsilon_lr(s).epsilon + s.noise_scale() * corr)
}

fn rf_at(widths: &[f64], s: &Scenario) -> Result<f64> {
    let r = epsilon_rf(&Architecture::new(widths.to_vec())?, s);
    if r.is_boundary() {
        return Err(Error::domain(format!("widths {widths:?} sit on a pole")));
    }
    Ok(r.epsilon)
}

/// Central-difference gradient of the RF error in the widths.
pub fn rf_width_gradient(arch: &Architecture, s: &Scenario, h: f64) -> Result<Vec<f64>> {
    let w = arch.widths();
    (0..w.len())
        .map(|i| {
            let mut p = w.to_vec();
            let mut m = w.to_vec();
            p[i] += h;
            m[i] -= h;
            Ok((rf_at(&p, s)? - rf_at(&m, s)?) / (2.0 * h))
        })
        .collect()
}

/// Central-difference Hessian of the RF error in the widths.
pub fn rf_width_hessian(arch: &Architecture, s: &Scenario, h: f64) -> Result<DMatrix<f64>> {
    let w = arch.widths();
    let n = w.len();
    let f0 = rf_at(w, s)?;
    let shifted = |steps: &[(usize, f64)]| {
        let mut x = w.to_vec();
        for &(i, k) in steps {
            x[i] += k * h;
        }
        rf_at(&x, s)
    };
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let d = (shifted(&[(i, 1.0)])? - 2.0 * f0 + shifted(&[(i, -1.0)])?) / (h * h);
        hess[(i, i)] = d;
        for j in 0..i {
            let v = (shifted(&[(i, 1.0), (j, 1.0)])? - shifted(&[(i, 1.0), (j, -1.0)])?
                - shifted(&[(i, -1.0), (j, 1.0)])?
                + shifted(&[(i, -1.0), (j, -1.0)])?)
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub gamma_star: f64,
    pub gradient: Vec<f64>,
    /// Largest gradient component allowed at a stationary point.
    pub gradient_tol: f64,
    /// Finite-difference Hessian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// `lambda` (`ell - 1` times) and `(ell + 1) lambda`, ascending.
    pub expected: Vec<f64>,
    pub lambda: f64,
    pub max_rel_error: f64,
    /// Description of the first failed check, if any.
    pub failure: Option<String>,
}

impl StationarityReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Relative tolerance of the Hessian eigenvalues against the analytic pair.
pub const HESSIAN_RTOL: f64 = 1e-3;

/// Check that equal widths `gamma*` are a stationary point of the RF error
/// with a positive-definite Hessian of the predicted spectrum.
pub fn verify_stationarity(ell: usize, s: &Scenario) -> Result<StationarityReport> {
    let report = rf_optimal_width(ell, s)?;
    let Some(Optimum::Width(g)) = report.optimum else {
        return Err(Error::domain(format!(
            "no finite optimum width at sigma~^2 = {}",
            report.sigma_tilde
        )));
    };
    let st2 = report.sigma_tilde;
    let arch = Architecture::uniform(g, ell)?;

    let h = 1e-5f64.max(1e-5 * g);
    let gradient = rf_width_gradient(&arch, s, h)?;
    let scale = rf_at(arch.widths(), s)?.abs().max(1.0);
    let gradient_tol = 1e-6 * scale;

    // a larger step keeps the second difference clear of cancellation
    let hess = rf_width_hessian(&arch, s, 1e-3 * g)?;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(hess).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);

    let lambda = s.alpha().powi(2) * s.noise_scale() * st2.powf(3.0 / (ell as f64 + 1.0)) / g.powi(4);
    let mut expected = vec![lambda; ell - 1];
    expected.push((ell as f64 + 1.0) * lambda);

    let max_rel_error = eigenvalues
        .iter()
        .zip(&expected)
        .map(|(e, x)| ((e - x) / x).abs())
        .fold(0.0, f64::max);

    let failure = if let Some(gi) = gradient.iter().find(|g| g.abs() > gradient_tol) {
        Some(format!("gradient component {gi:e} exceeds {gradient_tol:e}"))
    } else if let Some(e) = eigenvalues.iter().find(|e| **e <= 0.0) {
        Some(format!("non-positive Hessian eigenvalue {e:e}"))
    } else if max_rel_error > HESSIAN_RTOL {
        let (e, x) = eigenvalues
            .iter()
            .zip(&expected)
            .max_by(|a, b| ((a.0 - a.1) / a.1).abs().total_cmp(&((b.0 - b.1) / b.1).abs()))
            .expect("depth is at least one");
        Some(format!("Hessian eigenvalue {e:e} differs from predicted {x:e}"))
    } else {
        None
    };

    Ok(StationarityReport {
        gamma_star: g,
        gradient,
        gradient_tol,
        eigenvalues,
        expected,
        lambda,
        max_rel_error,
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(a: f64, s2: f64, e: f64) -> Scenario {
        Scenario::new(a, s2, e).unwrap()
    }

    #[test]
    fn width_examples() {
        let r = rf_optimal_width(1, &sc(0.5, 4.0, 0.0)).unwrap();
        let Some(Optimum::Width(g)) = r.optimum else { panic!("{r:?}") };
        assert!((g - 1.0).abs() < 1e-14);
        let r = rf_optimal_width(1, &sc(0.5, 1.0, 0.0)).unwrap();
        assert_eq!(r.regime, Regime::WiderAlwaysBetter);
        assert!(rf_optimal_width(1, &sc(1.2, 4.0, 0.0)).is_err());
    }

    #[test]
    fn optimum_width_grows_with_depth() {
        let s = sc(0.5, 4.0, 0.0);
        let gs: Vec<f64> = (1..20)
            .map(|l| match rf_optimal_width(l, &s).unwrap().optimum {
                Some(Optimum::Width(g)) => g,
                o => panic!("{o:?}"),
            })
            .collect();
        assert!(gs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn depth_examples() {
        let r = rf_optimal_depth(1.5, &sc(0.5, 4.0, 0.0)).unwrap();
        assert_eq!(r.optimum, Some(Optimum::Depth(vec![3])));
        // ln 4 / ln 2 = 2 exactly
        let r = rf_optimal_depth(1.0, &sc(0.5, 4.0, 0.0)).unwrap();
        assert_eq!(r.optimum, Some(Optimum::Depth(vec![1, 2])));
        let r = rf_optimal_depth(3.0, &sc(0.5, 1.0, 0.0)).unwrap();
        assert_eq!(r.regime, Regime::ShallowerAlwaysBetter);
    }

    #[test]
    fn nn_classification() {
        let regime = |s2| nn_width_monotonicity(&sc(0.5, s2, 0.0)).unwrap().regime;
        assert_eq!(regime(1.0), Regime::WidthIrrelevant);
        assert_eq!(regime(0.25), Regime::WiderAlwaysBetter);
        assert_eq!(regime(4.0), Regime::NarrowerAlwaysBetter);
    }

    #[test]
    fn continuation_matches_integer_depths() {
        let s = sc(0.4, 3.0, 0.3);
        for ell in 1..6 {
            let rf = epsilon_rf(&Architecture::uniform(1.7, ell).unwrap(), &s).epsilon;
            let c = rf_depth_continuation(1.7, ell as f64, &s).unwrap();
            assert!((rf - c).abs() < 1e-13, "{ell}: {rf} {c}");
        }
        assert_eq!(rf_depth_continuation(1.7, 0.0, &s).unwrap(), epsilon_lr(&s).epsilon);
    }

    #[test]
    fn single_layer_stationarity() {
        let r = verify_stationarity(1, &sc(0.5, 4.0, 0.0)).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.expected, vec![2.0 * r.lambda]);
    }
}
