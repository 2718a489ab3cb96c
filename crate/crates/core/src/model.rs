//! Problem setting shared by every other module: the three model classes,
//! hidden-layer width ratios, the experiment point (load, prior variance,
//! label noise), phase labels and the result record returned by the
//! learning-curve routines.
//!
//! Everything here is an immutable value type.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Relative distance to a pole below which a point is reported as
/// [`Phase::Boundary`] instead of being evaluated.
pub const BOUNDARY_REL_TOL: f64 = 1e-9;

/// Hidden-layer widths in units of the input dimension, `gamma_l = n_l / d`.
///
/// Storage order is the layer order; functions whose result does not depend
/// on the ordering sort a copy internally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    widths: Vec<f64>,
}

impl Architecture {
    pub fn new(widths: Vec<f64>) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::invalid("architecture needs at least one hidden layer"));
        }
        if let Some(bad) = widths.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::invalid(format!(
                "width ratios must be positive and finite, got {bad}"
            )));
        }
        Ok(Self { widths })
    }

    /// `depth` hidden layers, all of width ratio `gamma`.
    pub fn uniform(gamma: f64, depth: usize) -> Result<Self> {
        Self::new(vec![gamma; depth])
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn gamma_min(&self) -> f64 {
        self.widths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// One-based indices of the layers whose width equals `gamma_min` (to
    /// within [`BOUNDARY_REL_TOL`]).
    pub fn narrowest_layers(&self) -> Vec<usize> {
        let g = self.gamma_min();
        self.widths
            .iter()
            .enumerate()
            .filter(|(_, w)| (**w - g).abs() <= BOUNDARY_REL_TOL * g)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Every width multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.widths.iter().map(|w| w * k).collect())
    }

    /// Widths sorted ascending. Sums and products over layers are taken in
    /// this order so that permuting the layers gives bit-identical results.
    pub(crate) fn sorted_widths(&self) -> Vec<f64> {
        let mut w = self.widths.clone();
        w.sort_by(f64::total_cmp);
        w
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.widths.iter().map(|w| w.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "architecture", rename_all = "lowercase")]
pub enum ModelKind {
    /// Plain Bayesian linear regression.
    Lr,
    /// Deep linear random-feature model: only the readout is trained.
    Rf(Architecture),
    /// Deep linear network: every layer is trained.
    Nn(Architecture),
}

impl ModelKind {
    pub fn architecture(&self) -> Option<&Architecture> {
        match self {
            ModelKind::Lr => None,
            ModelKind::Rf(a) | ModelKind::Nn(a) => Some(a),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Rf(_) => "rf",
            ModelKind::Nn(_) => "nn",
        }
    }
}

/// One experiment point: load `alpha = p/d`, prior variance `sigma2` of the
/// end-to-end weights (per input dimension) and label-noise standard
/// deviation `eta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    alpha: f64,
    sigma2: f64,
    eta: f64,
}

impl Scenario {
    pub fn new(alpha: f64, sigma2: f64, eta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::invalid(format!("eta must be non-negative, got {eta}")));
        }
        Ok(Self { alpha, sigma2, eta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eta2(&self) -> f64 {
        self.eta * self.eta
    }

    /// `1 - alpha + eta^2`, the common factor of every finite-width
    /// correction in the under-sampled phase.
    pub fn noise_scale(&self) -> f64 {
        1.0 - self.alpha + self.eta2()
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.sigma2, self.eta)
    }
}

/// Rescaled prior variance, `sigma2 (1 - alpha) / (1 - alpha + eta^2)`.
///
/// Whether it lies above or below one decides if extra width or depth helps.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SigmaTilde(f64);

impl SigmaTilde {
    /// The value of the rescaled variance itself (not its square root).
    pub fn value(self) -> f64 {
        self.0
    }

    /// Comparison of the rescaled variance with one, with a relative
    /// tolerance of `1e-12` for the equality case.
    pub fn cmp_one(self) -> std::cmp::Ordering {
        if (self.0 - 1.0).abs() <= 1e-12 {
            std::cmp::Ordering::Equal
        } else if self.0 < 1.0 {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    }
}

pub fn sigma_tilde(s: &Scenario) -> Result<SigmaTilde> {
    if s.alpha() >= 1.0 {
        return Err(Error::domain(format!(
            "rescaled prior variance needs alpha < 1, got {}",
            s.alpha()
        )));
    }
    Ok(SigmaTilde(
        s.sigma2() / (1.0 + s.eta2() / (1.0 - s.alpha())),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    /// Fewer examples than the narrowest bottleneck (`alpha < min(1, gamma_min)`).
    UnderSampled,
    /// Random-feature model limited by a hidden layer narrower than the
    /// input: `gamma_min < 1` and `alpha > gamma_min`. `layers` are the
    /// one-based indices attaining `gamma_min`.
    Bottlenecked { layers: Vec<usize> },
    /// More examples than input dimensions, no bottleneck below one.
    OverSampled,
    /// Within [`BOUNDARY_REL_TOL`] of the pole at `pole`; never evaluated.
    Boundary { pole: f64 },
}

impl Phase {
    pub fn label(&self) -> &'static str {
        match self {
            Phase::UnderSampled => "under_sampled",
            Phase::Bottlenecked { .. } => "bottlenecked",
            Phase::OverSampled => "over_sampled",
            Phase::Boundary { .. } => "boundary",
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, Phase::Boundary { .. })
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Bottlenecked { layers } => {
                let l: Vec<String> = layers.iter().map(|i| i.to_string()).collect();
                write!(f, "bottlenecked[{}]", l.join(";"))
            }
            other => f.write_str(other.label()),
        }
    }
}

fn near(x: f64, pole: f64) -> bool {
    (x - pole).abs() <= BOUNDARY_REL_TOL * pole.abs().max(f64::MIN_POSITIVE)
}

/// Phase of a model at a scenario.
///
/// LR and NN models only have the pole at `alpha = 1`. For RF models the
/// visible pole is `min(1, gamma_min)`; with `gamma_min >= 1` and
/// `alpha > 1` the over-sampled label is used (the bottleneck and
/// over-sampled branches coincide at `gamma_min = 1`).
pub fn classify_phase(m: &ModelKind, s: &Scenario) -> Phase {
    let a = s.alpha();
    match m {
        ModelKind::Lr | ModelKind::Nn(_) => {
            if near(a, 1.0) {
                Phase::Boundary { pole: 1.0 }
            } else if a < 1.0 {
                Phase::UnderSampled
            } else {
                Phase::OverSampled
            }
        }
        ModelKind::Rf(arch) => {
            let gmin = arch.gamma_min();
            let pole = gmin.min(1.0);
            if near(a, pole) {
                Phase::Boundary { pole }
            } else if a < pole {
                Phase::UnderSampled
            } else if gmin < 1.0 {
                Phase::Bottlenecked { layers: arch.narrowest_layers() }
            } else {
                Phase::OverSampled
            }
        }
    }
}

/// Diagnostics attached to a [`TheoryResult`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// The error diverges at this point; `epsilon` is `+inf`.
    pub divergent: bool,
    /// `|z^(l+1) - rhs| / max(1, z^(l+1))` at the selected root.
    pub residual: Option<f64>,
    /// Every layer factor `(gamma_l - alpha) z + alpha (1 - alpha + eta^2)` is positive.
    pub factors_positive: Option<bool>,
    /// Every layer overlap `C_l` is positive.
    pub overlaps_positive: Option<bool>,
    /// All positive roots of the root condition found by bracketing,
    /// admissible or not.
    pub candidates: Vec<f64>,
    /// More than one candidate passed the positivity filters.
    pub multiple_roots: bool,
    /// For depth one: relative disagreement between the closed-form root and
    /// the bracketing solver.
    pub cross_check: Option<f64>,
}

/// Average-case generalization error of a model at one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryResult {
    /// `+inf` when divergent, `NaN` at a non-divergent boundary point.
    pub epsilon: f64,
    pub phase: Phase,
    /// Deep-network order parameter, present in the under-sampled phase.
    pub z: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl TheoryResult {
    pub(crate) fn finite(epsilon: f64, phase: Phase) -> Self {
        Self { epsilon, phase, z: None, diagnostics: Diagnostics::default() }
    }

    pub(crate) fn boundary(pole: f64, divergent: bool) -> Self {
        Self {
            epsilon: if divergent { f64::INFINITY } else { f64::NAN },
            phase: Phase::Boundary { pole },
            z: None,
            diagnostics: Diagnostics { divergent, ..Diagnostics::default() },
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.phase.is_boundary()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(a: f64, s2: f64, e: f64) -> Scenario {
        Scenario::new(a, s2, e).unwrap()
    }

    #[test]
    fn sigma_tilde_values() {
        assert_eq!(sigma_tilde(&sc(0.5, 1.0, 0.0)).unwrap().value(), 1.0);
        assert_eq!(sigma_tilde(&sc(0.5, 4.0, 0.0)).unwrap().value(), 4.0);
        let v = sigma_tilde(&sc(0.5, 4.0, 0.5)).unwrap().value();
        assert!((v - 8.0 / 3.0).abs() < 1e-15);
        assert!(matches!(sigma_tilde(&sc(1.0, 1.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(sigma_tilde(&sc(1.5, 1.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::new(0.0, 1.0, 0.0).is_err());
        assert!(Scenario::new(0.5, 0.0, 0.0).is_err());
        assert!(Scenario::new(0.5, 1.0, -0.1).is_err());
        assert!(Scenario::new(f64::NAN, 1.0, 0.0).is_err());
        assert!(Scenario::new(0.5, 1.0, 0.0).is_ok());
    }

    #[test]
    fn architecture_validation() {
        assert!(Architecture::new(vec![]).is_err());
        assert!(Architecture::new(vec![1.0, -2.0]).is_err());
        assert!(Architecture::new(vec![1.0, f64::INFINITY]).is_err());
        let a = Architecture::new(vec![2.0, 0.5, 3.0, 0.5]).unwrap();
        assert_eq!(a.depth(), 4);
        assert_eq!(a.gamma_min(), 0.5);
        assert_eq!(a.narrowest_layers(), vec![2, 4]);
    }

    #[test]
    fn phase_examples() {
        let rf = ModelKind::Rf(Architecture::new(vec![0.5]).unwrap());
        assert_eq!(
            classify_phase(&rf, &sc(0.8, 1.0, 0.0)),
            Phase::Bottlenecked { layers: vec![1] }
        );
        assert_eq!(classify_phase(&ModelKind::Lr, &sc(2.0, 1.0, 0.0)), Phase::OverSampled);
        let nn = ModelKind::Nn(Architecture::new(vec![0.5, 2.0]).unwrap());
        assert_eq!(classify_phase(&nn, &sc(0.7, 1.0, 0.0)), Phase::UnderSampled);
    }

    #[test]
    fn boundary_points_are_flagged() {
        assert!(classify_phase(&ModelKind::Lr, &sc(1.0, 1.0, 0.0)).is_boundary());
        assert!(classify_phase(&ModelKind::Lr, &sc(1.0 + 1e-12, 1.0, 0.0)).is_boundary());
        assert!(!classify_phase(&ModelKind::Lr, &sc(1.0 + 1e-6, 1.0, 0.0)).is_boundary());
        let rf = ModelKind::Rf(Architecture::new(vec![2.0, 0.3]).unwrap());
        assert_eq!(classify_phase(&rf, &sc(0.3, 1.0, 0.0)), Phase::Boundary { pole: 0.3 });
        // alpha = 1 is not a pole once a bottleneck narrower than one exists
        assert!(matches!(
            classify_phase(&rf, &sc(1.0, 1.0, 0.5)),
            Phase::Bottlenecked { .. }
        ));
        let wide = ModelKind::Rf(Architecture::new(vec![2.0, 3.0]).unwrap());
        assert_eq!(classify_phase(&wide, &sc(1.0, 1.0, 0.0)), Phase::Boundary { pole: 1.0 });
    }

    #[test]
    fn unit_width_bottleneck_is_over_sampled() {
        let rf = ModelKind::Rf(Architecture::new(vec![1.0]).unwrap());
        assert_eq!(classify_phase(&rf, &sc(1.5, 1.0, 0.0)), Phase::OverSampled);
        assert_eq!(classify_phase(&rf, &sc(0.5, 1.0, 0.0)), Phase::UnderSampled);
    }

    #[test]
    fn wide_rf_matches_lr_phase() {
        for a in [0.1, 0.5, 0.9, 1.5, 3.0] {
            let s = sc(a, 1.0, 0.0);
            let rf = ModelKind::Rf(Architecture::new(vec![a.max(1.0) * 1.01, 7.0]).unwrap());
            assert_eq!(classify_phase(&rf, &s), classify_phase(&ModelKind::Lr, &s));
        }
    }
}
