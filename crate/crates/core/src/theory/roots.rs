//! Root condition of the deep linear network in the under-sampled phase,
//!
//! ```text
//! z^(l+1) = sigma2 (1 - alpha) * prod_l (a_l z + b_l),
//! a_l = (gamma_l - alpha) / gamma_l,   b_l = alpha (1 - alpha + eta^2) / gamma_l,
//! ```
//!
//! and a derivative-free solver for it.
//!
//! For `z > 0` the equation is equivalent to `g(u) = 1` with `u = 1/z` and
//! `g(u) = P u prod_l (a_l + b_l u)`. On the set where every factor is
//! positive `g` is a product of positive increasing functions, so it is
//! strictly increasing there and runs from 0 to infinity: the admissible
//! root always exists and is unique. The solver still brackets every sign
//! change on `(0, z_max]` and filters afterwards, so that an admissibility
//! failure would surface as a diagnostic rather than a silently wrong root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Architecture, Diagnostics, Scenario};

/// Points in each half (geometric, uniform) of the initial scan, per degree.
const SCAN_POINTS_PER_DEGREE: usize = 48;
/// Maximum recursive splits of a scan interval that looks like it may hide
/// a pair of roots.
const MAX_REFINE_DEPTH: usize = 24;
/// Relative width at which bisection stops.
const BISECT_RTOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootCondition {
    /// `(gamma_l - alpha) / gamma_l`, in ascending width order.
    pub a: Vec<f64>,
    /// `alpha (1 - alpha + eta^2) / gamma_l`, same order as `a`.
    pub b: Vec<f64>,
    /// `sigma2 (1 - alpha)`.
    pub prefactor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSolution {
    pub z: f64,
    pub diagnostics: Diagnostics,
}

/// Coefficients of the root condition. Only defined for `alpha < 1`.
pub fn build_root_condition(arch: &Architecture, s: &Scenario) -> Result<RootCondition> {
    let alpha = s.alpha();
    if alpha >= 1.0 {
        return Err(Error::domain(format!(
            "root condition governs alpha < 1 only, got {alpha}"
        )));
    }
    let scale = s.noise_scale();
    let widths = arch.sorted_widths();
    Ok(RootCondition {
        a: widths.iter().map(|g| (g - alpha) / g).collect(),
        b: widths.iter().map(|g| alpha * scale / g).collect(),
        prefactor: s.sigma2() * (1.0 - alpha),
    })
}

impl RootCondition {
    pub fn depth(&self) -> usize {
        self.a.len()
    }

    pub fn factor(&self, l: usize, z: f64) -> f64 {
        self.a[l] * z + self.b[l]
    }

    /// Right-hand side `P prod_l (a_l z + b_l)`.
    pub fn rhs(&self, z: f64) -> f64 {
        (0..self.depth()).fold(self.prefactor, |acc, l| acc * self.factor(l, z))
    }

    /// `1 - rhs(z) / z^(l+1)`, which has the sign of `z^(l+1) - rhs(z)` for
    /// `z > 0` and cannot overflow.
    pub fn scaled(&self, z: f64) -> f64 {
        let inner = (0..self.depth())
            .fold(self.prefactor / z, |acc, l| acc * (self.a[l] + self.b[l] / z));
        1.0 - inner
    }

    /// `|z^(l+1) - rhs(z)| / max(1, |z|^(l+1))`.
    pub fn residual(&self, z: f64) -> f64 {
        let lhs = z.powi(self.depth() as i32 + 1);
        (lhs - self.rhs(z)).abs() / lhs.abs().max(1.0)
    }

    /// Every `(gamma_l - alpha) z + alpha (1 - alpha + eta^2)` is positive.
    pub fn factors_positive(&self, z: f64) -> bool {
        (0..self.depth()).all(|l| self.factor(l, z) > 0.0)
    }

    /// Layer overlaps `C_l = z^(-l) prod_{l' >= l} (a_l' z + b_l')` for
    /// `l = 1..depth`, evaluated in the stored layer order.
    pub fn overlaps(&self, z: f64) -> Vec<f64> {
        let n = self.depth();
        let mut out = vec![0.0; n];
        let mut tail = 1.0;
        for l in (0..n).rev() {
            tail *= self.factor(l, z);
            out[l] = tail / z.powi(l as i32 + 1);
        }
        out
    }

    pub fn overlaps_positive(&self, z: f64) -> bool {
        self.overlaps(z).iter().all(|c| *c > 0.0)
    }

    pub fn is_admissible(&self, z: f64) -> bool {
        z > 0.0 && self.factors_positive(z) && self.overlaps_positive(z)
    }

    /// Upper end of the bracketing window. For `z >= 1` a positive factor is
    /// at most `(max(a_l, 0) + b_l) z`, so no admissible root lies beyond
    /// this. Roots with negative factors may.
    pub fn z_max(&self) -> f64 {
        let prod = self
            .a
            .iter()
            .zip(&self.b)
            .fold(self.prefactor, |acc, (a, b)| acc * (a.max(0.0) + b).max(1.0));
        prod + 1.0
    }

    /// All positive roots located by scanning `(0, z_max]`, ascending.
    pub fn bracket_roots(&self) -> Vec<f64> {
        let z_max = self.z_max();
        let n = SCAN_POINTS_PER_DEGREE * (self.depth() + 1);
        let z_lo = z_max * 1e-15;
        let log_span = (z_max / z_lo).ln();
        let mut grid: Vec<f64> = (0..=n)
            .map(|i| z_lo * (log_span * i as f64 / n as f64).exp())
            .chain((1..=n).map(|i| z_max * i as f64 / n as f64))
            .collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();

        let vals: Vec<f64> = grid.iter().map(|&z| self.scaled(z)).collect();
        let mut roots = Vec::new();
        for i in 0..grid.len() - 1 {
            self.search(grid[i], vals[i], grid[i + 1], vals[i + 1], 0, &mut roots);
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs().max(y.abs()));
        roots
    }

    fn search(&self, lo: f64, flo: f64, hi: f64, fhi: f64, depth: usize, out: &mut Vec<f64>) {
        if flo == 0.0 {
            out.push(lo);
            return;
        }
        if flo.signum() != fhi.signum() {
            if fhi != 0.0 {
                out.push(self.bisect(lo, flo, hi));
            }
            return;
        }
        // same sign at both ends: split when the midpoint is closer to zero
        // than either end, which is how a hidden pair of crossings shows up
        if depth >= MAX_REFINE_DEPTH {
            return;
        }
        let mid = 0.5 * (lo + hi);
        let fmid = self.scaled(mid);
        if fmid.signum() != flo.signum() || fmid.abs() < flo.abs().min(fhi.abs()) {
            self.search(lo, flo, mid, fmid, depth + 1, out);
            self.search(mid, fmid, hi, fhi, depth + 1, out);
        }
    }

    fn bisect(&self, mut lo: f64, mut flo: f64, mut hi: f64) -> f64 {
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= BISECT_RTOL * hi {
                return mid;
            }
            let fmid = self.scaled(mid);
            if fmid == 0.0 {
                return mid;
            }
            if fmid.signum() == flo.signum() {
                lo = mid;
                flo = fmid;
            } else {
                hi = mid;
            }
        }
    }

    /// Positive root of the depth-one quadratic `z^2 = P (a z + b)`, in a
    /// form free of cancellation for either sign of `a`.
    pub fn quadratic_root(&self) -> Option<f64> {
        if self.depth() != 1 {
            return None;
        }
        let pa = self.prefactor * self.a[0];
        let pb = self.prefactor * self.b[0];
        let disc = (pa * pa + 4.0 * pb).sqrt();
        Some(if pa >= 0.0 { 0.5 * (pa + disc) } else { 2.0 * pb / (disc - pa) })
    }
}

/// Solve the root condition for the admissible order parameter `z`.
///
/// Depth one uses the closed-form quadratic root and records its relative
/// disagreement with the bracketing solver in `cross_check`.
pub fn solve_z(rc: &RootCondition) -> Result<RootSolution> {
    let candidates = rc.bracket_roots();
    let admissible: Vec<f64> =
        candidates.iter().copied().filter(|&z| rc.is_admissible(z)).collect();

    let (z, cross_check) = match (rc.quadratic_root(), admissible.first()) {
        (Some(q), generic) => {
            let cc = generic.map(|g| (q - g).abs() / q.abs().max(f64::MIN_POSITIVE));
            (q, cc.or(Some(f64::INFINITY)))
        }
        (None, Some(&g)) => (g, None),
        (None, None) => return Err(Error::NoPhysicalRoot { candidates }),
    };
    if !rc.is_admissible(z) {
        return Err(Error::NoPhysicalRoot { candidates });
    }

    Ok(RootSolution {
        z,
        diagnostics: Diagnostics {
            divergent: false,
            residual: Some(rc.residual(z)),
            factors_positive: Some(rc.factors_positive(z)),
            overlaps_positive: Some(rc.overlaps_positive(z)),
            multiple_roots: admissible.len() > 1,
            candidates,
            cross_check,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rc(widths: &[f64], a: f64, s2: f64, e: f64) -> RootCondition {
        let arch = Architecture::new(widths.to_vec()).unwrap();
        build_root_condition(&arch, &Scenario::new(a, s2, e).unwrap()).unwrap()
    }

    /// Plain bisection of the quadratic on (0, 10), independent of the
    /// solver's grid and scaled form.
    fn bisect_quadratic(f: impl Fn(f64) -> f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn coefficient_examples() {
        let c = rc(&[1.0], 0.5, 4.0, 0.0);
        assert_eq!((c.a.clone(), c.b.clone(), c.prefactor), (vec![0.5], vec![0.25], 2.0));
        let c = rc(&[2.0, 2.0], 0.5, 1.0, 0.0);
        assert_eq!((c.a.clone(), c.b.clone(), c.prefactor), (vec![0.75; 2], vec![0.125; 2], 0.5));
        let c = rc(&[1.0], 0.5, 1.0, 1.0);
        assert_eq!(c.b, vec![0.75]);
    }

    #[test]
    fn over_sampled_has_no_root_condition() {
        let arch = Architecture::new(vec![1.0]).unwrap();
        let s = Scenario::new(1.2, 1.0, 0.0).unwrap();
        assert!(matches!(build_root_condition(&arch, &s), Err(Error::Domain(_))));
    }

    #[test]
    fn quadratic_example_matches_bisection() {
        let expected = bisect_quadratic(|z| z * z - 2.0 * (0.5 * z + 0.25));
        assert!((expected - 1.366_025_403_784_438_6).abs() < 1e-14);
        let sol = solve_z(&rc(&[1.0], 0.5, 4.0, 0.0)).unwrap();
        assert!((sol.z - expected).abs() < 1e-13);
        assert!(sol.diagnostics.cross_check.unwrap() < 1e-10);
    }

    #[test]
    fn matched_prior_gives_one_minus_alpha() {
        for widths in [vec![0.3], vec![2.0, 2.0], vec![0.2, 5.0, 0.7]] {
            let sol = solve_z(&rc(&widths, 0.5, 1.0, 0.0)).unwrap();
            assert!((sol.z - 0.5).abs() < 1e-13, "{widths:?}: {}", sol.z);
        }
    }

    #[test]
    fn narrow_layers_give_negative_a() {
        // gamma < alpha makes a_l negative; the quadratic form must stay accurate
        let c = rc(&[0.1], 0.9, 3.0, 0.5);
        assert!(c.a[0] < 0.0);
        let sol = solve_z(&c).unwrap();
        assert!(sol.diagnostics.residual.unwrap() < 1e-13);
        assert!(sol.diagnostics.cross_check.unwrap() < 1e-10);
        assert!(c.factors_positive(sol.z));
    }

    #[test]
    fn deep_solutions_are_unique_and_admissible() {
        let c = rc(&[0.2, 0.4, 3.0, 0.05, 1.0, 8.0], 0.6, 2.5, 0.7);
        let sol = solve_z(&c).unwrap();
        assert!(!sol.diagnostics.multiple_roots);
        assert!(sol.diagnostics.residual.unwrap() <= 1e-12);
        assert_eq!(sol.diagnostics.factors_positive, Some(true));
        assert_eq!(sol.diagnostics.overlaps_positive, Some(true));
    }

    #[test]
    fn unphysical_candidates_are_filtered() {
        // two narrow layers: both factors negative beyond some z, product positive
        let c = rc(&[0.1, 0.1], 0.9, 50.0, 0.0);
        let sol = solve_z(&c).unwrap();
        assert!(c.is_admissible(sol.z));
        for z in &sol.diagnostics.candidates {
            if *z != sol.z {
                assert!(!c.is_admissible(*z));
            }
        }
    }

    #[test]
    fn overlaps_match_definition() {
        let c = rc(&[1.0, 2.0], 0.5, 1.0, 0.0);
        let z = 0.7;
        let f: Vec<f64> = (0..2).map(|l| c.factor(l, z)).collect();
        let ov = c.overlaps(z);
        assert!((ov[0] - f[0] * f[1] / z).abs() < 1e-15);
        assert!((ov[1] - f[1] / (z * z)).abs() < 1e-15);
    }
}
