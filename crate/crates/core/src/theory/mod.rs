//! Learning curves of the three model classes.
//!
//! LR and RF curves are closed forms. The NN curve adds the order
//! parameter `z` from [`roots`] to the LR curve in the under-sampled phase
//! and coincides with LR above `alpha = 1`.

pub mod roots;

use crate::error::Result;
use crate::model::{classify_phase, Architecture, ModelKind, Phase, Scenario, TheoryResult};

pub use roots::{build_root_condition, solve_z, RootCondition, RootSolution};

/// Learning curve of Bayesian linear regression.
pub fn epsilon_lr(s: &Scenario) -> TheoryResult {
    let phase = classify_phase(&ModelKind::Lr, s);
    match phase {
        Phase::Boundary { pole } => TheoryResult::boundary(pole, s.eta() > 0.0),
        _ => TheoryResult::finite(lr_value(s), phase),
    }
}

fn lr_value(s: &Scenario) -> f64 {
    let (a, e2) = (s.alpha(), s.eta2());
    if a < 1.0 {
        (1.0 + s.sigma2()) * (1.0 - a) + a * e2 / (1.0 - a)
    } else {
        e2 / (a - 1.0)
    }
}

/// Learning curve of the deep random-feature model.
///
/// Sums and products over layers run in ascending width order, so the
/// result is bit-identical under any permutation of the widths.
pub fn epsilon_rf(arch: &Architecture, s: &Scenario) -> TheoryResult {
    let m = ModelKind::Rf(arch.clone());
    let phase = classify_phase(&m, s);
    let (a, s2, e2) = (s.alpha(), s.sigma2(), s.eta2());
    let gmin = arch.gamma_min();
    let eps = match phase {
        Phase::Boundary { pole } => {
            // the pole at gamma_min < 1 diverges from the left for any noise
            let divergent = s.eta() > 0.0 || pole < 1.0;
            return TheoryResult::boundary(pole, divergent);
        }
        Phase::UnderSampled => {
            let widths = arch.sorted_widths();
            let prod: f64 = widths.iter().map(|g| (g - a) / g).product();
            let poles: f64 = widths.iter().map(|g| a / (g - a)).sum();
            (1.0 - a) * (1.0 + s2 * prod + poles) + (a / (1.0 - a) + poles) * e2
        }
        Phase::Bottlenecked { .. } => a * (1.0 - gmin) / (a - gmin) + gmin * e2 / (a - gmin),
        Phase::OverSampled => e2 / (a - 1.0),
    };
    TheoryResult::finite(eps, phase)
}

/// Learning curve of the deep linear network.
pub fn epsilon_nn(arch: &Architecture, s: &Scenario) -> Result<TheoryResult> {
    let lr = epsilon_lr(s);
    match lr.phase {
        Phase::UnderSampled => {
            let rc = build_root_condition(arch, s)?;
            let sol = solve_z(&rc)?;
            Ok(TheoryResult {
                epsilon: lr.epsilon + sol.z - rc.prefactor,
                phase: Phase::UnderSampled,
                z: Some(sol.z),
                diagnostics: sol.diagnostics,
            })
        }
        _ => Ok(lr),
    }
}

/// Learning curve of any model kind.
pub fn epsilon(m: &ModelKind, s: &Scenario) -> Result<TheoryResult> {
    match m {
        ModelKind::Lr => Ok(epsilon_lr(s)),
        ModelKind::Rf(arch) => Ok(epsilon_rf(arch, s)),
        ModelKind::Nn(arch) => epsilon_nn(arch, s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(a: f64, s2: f64, e: f64) -> Scenario {
        Scenario::new(a, s2, e).unwrap()
    }

    fn arch(w: &[f64]) -> Architecture {
        Architecture::new(w.to_vec()).unwrap()
    }

    #[test]
    fn lr_values() {
        assert_eq!(epsilon_lr(&sc(0.5, 1.0, 0.0)).epsilon, 1.0);
        assert_eq!(epsilon_lr(&sc(2.0, 1.0, 0.5)).epsilon, 0.25);
        assert!((epsilon_lr(&sc(0.5, 1.0, 0.5)).epsilon - 1.25).abs() < 1e-15);
    }

    #[test]
    fn lr_boundary() {
        let r = epsilon_lr(&sc(1.0, 1.0, 0.5));
        assert!(r.is_boundary() && r.diagnostics.divergent && r.epsilon == f64::INFINITY);
        let r = epsilon_lr(&sc(1.0, 1.0, 0.0));
        assert!(r.is_boundary() && !r.diagnostics.divergent && r.epsilon.is_nan());
    }

    #[test]
    fn rf_branches() {
        assert!((epsilon_rf(&arch(&[1.0]), &sc(0.5, 1.0, 0.0)).epsilon - 1.25).abs() < 1e-15);
        let r = epsilon_rf(&arch(&[0.5]), &sc(0.8, 1.0, 0.0));
        assert!((r.epsilon - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.phase, Phase::Bottlenecked { layers: vec![1] });
        assert_eq!(epsilon_rf(&arch(&[1.5]), &sc(2.0, 1.0, 0.5)).epsilon, 0.25);
    }

    #[test]
    fn rf_bottleneck_pole_diverges_without_noise() {
        let r = epsilon_rf(&arch(&[0.5, 3.0]), &sc(0.5, 1.0, 0.0));
        assert!(r.diagnostics.divergent);
        assert_eq!(r.phase, Phase::Boundary { pole: 0.5 });
    }

    #[test]
    fn nn_values() {
        let r = epsilon_nn(&arch(&[0.7, 3.0]), &sc(0.5, 1.0, 0.0)).unwrap();
        assert!((r.epsilon - 1.0).abs() < 1e-13);
        let r = epsilon_nn(&arch(&[1.0]), &sc(0.5, 4.0, 0.0)).unwrap();
        assert!((r.epsilon - 1.866_025_403_784_438_6).abs() < 1e-13);
        let r = epsilon_nn(&arch(&[0.2]), &sc(2.0, 1.0, 0.5)).unwrap();
        assert_eq!((r.epsilon, r.z), (0.25, None));
    }

    #[test]
    fn wide_rf_reduces_to_lr() {
        for (a, s2, e) in [(0.3, 1.0, 0.0), (0.5, 4.0, 0.5), (0.9, 0.3, 1.0), (1.7, 2.0, 0.4)] {
            let s = sc(a, s2, e);
            let rf = epsilon_rf(&arch(&[1e8]), &s).epsilon;
            assert!((rf - epsilon_lr(&s).epsilon).abs() < 1e-6, "{a} {s2} {e}");
        }
    }
}
