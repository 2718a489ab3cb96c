//! Acceptance checks run by `dlc selftest` and the `acceptance` test target.
//!
//! Every check is deterministic: random grids and simulations use fixed
//! seeds. A check returns a one-line summary on success and the first
//! offending point on failure.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::config::{Format, GridPoint, SimSettings, SweepConfig};
use super::output::{render_table, write_atomic};
use super::run::{run_gapscan, run_grid, ResultRow};
use crate::model::{Architecture, ModelKind, Scenario};
use crate::optimal::{
    nn_width_monotonicity, rf_depth_continuation, rf_optimal_depth, rf_optimal_width,
    verify_stationarity, Optimum, Regime,
};
use crate::perturbation::{
    gap_exact_two_layer, nn_first_order, nn_second_order, rf_first_order, rf_nn_gap_leading,
    rf_series,
};
use crate::sim::{bessel_k_ratio, inverse_wishart_trace};
use crate::theory::{
    build_root_condition, epsilon_lr, epsilon_nn, epsilon_rf, solve_z,
};

/// Base seed of every simulation in the suite.
pub const SEED: u64 = 20_241_016;

pub type Check = std::result::Result<String, String>;

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub run: fn() -> Check,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "lr-closed-form", run: lr_closed_form },
    Criterion { id: 2, name: "lr-simulation", run: lr_simulation },
    Criterion { id: 3, name: "rf-simulation", run: rf_simulation },
    Criterion { id: 4, name: "rf-phase-structure", run: rf_phase_structure },
    Criterion { id: 5, name: "nn-root-solver", run: nn_root_solver },
    Criterion { id: 6, name: "nn-simulation", run: nn_simulation },
    Criterion { id: 7, name: "bessel-ratio", run: bessel_ratio },
    Criterion { id: 8, name: "perturbation", run: perturbation },
    Criterion { id: 9, name: "generalization-gap", run: generalization_gap },
    Criterion { id: 10, name: "optimal-architecture", run: optimal_architecture },
    Criterion { id: 11, name: "determinism", run: determinism },
];

pub fn run_criterion(c: &Criterion) -> Outcome {
    let start = Instant::now();
    let result = std::panic::catch_unwind(c.run).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let (passed, detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Outcome { id: c.id, name: c.name, passed, detail, elapsed: start.elapsed() }
}

/// Run the selected criteria (all when `ids` is empty) in order.
pub fn run_selected(ids: &[u32]) -> Vec<Outcome> {
    CRITERIA
        .iter()
        .filter(|c| ids.is_empty() || ids.contains(&c.id))
        .map(run_criterion)
        .collect()
}

fn sc(alpha: f64, sigma2: f64, eta: f64) -> Scenario {
    Scenario::new(alpha, sigma2, eta).expect("valid scenario")
}

fn arch(widths: &[f64]) -> Architecture {
    Architecture::new(widths.to_vec()).expect("valid widths")
}

fn rel_err(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(f64::MIN_POSITIVE)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(label: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol * want.abs().max(1.0), || {
        format!("{label}: got {got:.15e}, want {want:.15e}")
    })
}

/// `|mean - theory|` in units of the standard error, with an absolute floor
/// of `1e-12` for points where both vanish.
fn z_score(row: &ResultRow) -> Option<f64> {
    let sim = row.sim.as_ref()?;
    let (m, se, t) = (sim.mean?, sim.se?, row.epsilon_theory?);
    let dev = (m - t).abs();
    Some(if dev <= 1e-12 * t.abs().max(1.0) { 0.0 } else { dev / se })
}

struct Agreement {
    total: usize,
    within3: usize,
    beyond4: usize,
    worst: Option<(f64, String)>,
}

fn agreement(rows: &[ResultRow]) -> Result<Agreement, String> {
    let mut a = Agreement { total: 0, within3: 0, beyond4: 0, worst: None };
    for r in rows {
        let z = z_score(r).ok_or_else(|| {
            format!("no comparison at {} {:?} alpha={} ({:?})", r.model, r.widths, r.alpha, r.flags)
        })?;
        a.total += 1;
        a.within3 += usize::from(z <= 3.0);
        a.beyond4 += usize::from(z > 4.0);
        if a.worst.as_ref().is_none_or(|(w, _)| z > *w) {
            let label = format!(
                "{} widths={:?} alpha={} sigma2={} eta={}",
                r.model, r.widths, r.alpha, r.sigma2, r.eta
            );
            a.worst = Some((z, label));
        }
    }
    Ok(a)
}

impl Agreement {
    fn fraction(&self) -> f64 {
        self.within3 as f64 / self.total.max(1) as f64
    }

    fn summary(&self) -> String {
        let (z, at) = self.worst.clone().unwrap_or((0.0, String::new()));
        format!(
            "{}/{} within 3 se, {} beyond 4 se, worst {z:.2} se at {at}",
            self.within3, self.total, self.beyond4
        )
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t <= budget, || format!("took {:.1}s, budget {:.0}s", t.as_secs_f64(), budget.as_secs_f64()))
}

fn sim(n_reps: usize) -> SimSettings {
    SimSettings { d: 100, n_reps, base_seed: SEED }
}

fn grid_points(model: impl Fn(Architecture) -> ModelKind, archs: &[Vec<f64>], scenarios: &[Scenario]) -> Vec<GridPoint> {
    archs
        .iter()
        .flat_map(|w| {
            let m = model(arch(w));
            scenarios.iter().map(move |s| GridPoint { model: m.clone(), scenario: *s })
        })
        .collect()
}

fn lr_closed_form() -> Check {
    for (a, s2, e, want) in [(0.5, 1.0, 0.0, 1.0), (0.5, 1.0, 0.5, 1.25), (2.0, 1.0, 0.5, 0.25)] {
        close(&format!("alpha={a} sigma2={s2} eta={e}"), epsilon_lr(&sc(a, s2, e)).epsilon, want, 1e-12)?;
    }
    Ok("3 plug-in values to 1e-12".into())
}

fn lr_simulation() -> Check {
    let start = Instant::now();
    let points: Vec<GridPoint> = [0.0, 0.5]
        .iter()
        .flat_map(|&eta| {
            [30, 50, 70, 150, 200].map(|p| GridPoint {
                model: ModelKind::Lr,
                scenario: sc(p as f64 / 100.0, 1.0, eta),
            })
        })
        .collect();
    let rows = run_grid(&points, Some(&sim(10)));
    let a = agreement(&rows)?;
    ensure(a.within3 == a.total, || a.summary())?;

    // E tr[(X X^T)^-1] = p / (d - p - 1) for p x d standard Gaussian X
    for p in [20, 50, 80] {
        let est = inverse_wishart_trace(100, p, 10, SEED).map_err(|e| e.to_string())?;
        let want = p as f64 / (100.0 - p as f64 - 1.0);
        ensure((est.mean - want).abs() <= 3.0 * est.se, || {
            format!("inverse Wishart trace at p={p}: {:.5} +- {:.5}, want {want:.5}", est.mean, est.se)
        })?;
    }
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!("{}; inverse Wishart trace at p in {{20,50,80}}", a.summary()))
}

/// RF curves diverge only at `alpha = min(1, gamma_min)`.
fn near_pole(alpha: f64, widths: &[f64]) -> bool {
    let pole = widths.iter().copied().fold(1.0, f64::min);
    (alpha - pole).abs() <= 0.1 + 1e-9
}

fn rf_simulation() -> Check {
    let start = Instant::now();
    let gammas = [0.5, 1.0, 2.0];
    let archs: Vec<Vec<f64>> = gammas
        .iter()
        .map(|&g| vec![g])
        .chain(gammas.iter().flat_map(|&g1| gammas.iter().map(move |&g2| vec![g1, g2])))
        .collect();
    let mut points = Vec::new();
    for w in &archs {
        for eta in [0.0, 0.5] {
            for k in 1..=20 {
                let alpha = k as f64 / 10.0;
                if !near_pole(alpha, w) {
                    points.push(GridPoint { model: ModelKind::Rf(arch(w)), scenario: sc(alpha, 1.0, eta) });
                }
            }
        }
    }
    let rows = run_grid(&points, Some(&sim(10)));
    let a = agreement(&rows)?;
    ensure(a.fraction() >= 0.95 && a.beyond4 == 0, || a.summary())?;
    within_budget(start, Duration::from_secs(120))?;
    Ok(a.summary())
}

fn rf_phase_structure() -> Check {
    let s = sc(0.5, 1.0, 0.0);
    let near = epsilon_rf(&arch(&[0.55]), &s).epsilon;
    let far = epsilon_rf(&arch(&[1.5]), &s).epsilon;
    ensure(near >= 5.0 * far, || format!("eps(gamma=0.55)={near}, eps(gamma=1.5)={far}"))?;
    close("branch 1", epsilon_rf(&arch(&[1.0]), &s).epsilon, 1.25, 1e-12)?;
    close("branch 2", epsilon_rf(&arch(&[0.5]), &sc(0.8, 1.0, 0.0)).epsilon, 4.0 / 3.0, 1e-12)?;
    close("branch 3", epsilon_rf(&arch(&[1.5]), &sc(2.0, 1.0, 0.5)).epsilon, 0.25, 1e-12)?;
    Ok(format!("onset ratio {:.2}; three branch values to 1e-12", near / far))
}

fn nn_root_solver() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let depth = rng.gen_range(1..=8);
        let widths: Vec<f64> = (0..depth).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect();
        let s = sc(rng.gen_range(0.05..0.95), 10f64.powf(rng.gen_range(-1.0..1.0)), rng.gen_range(0.0..1.0));
        let rc = build_root_condition(&arch(&widths), &s).map_err(|e| e.to_string())?;
        let sol = solve_z(&rc).map_err(|e| format!("point {i} widths={widths:?} {s:?}: {e}"))?;
        let r = rc.residual(sol.z);
        worst = worst.max(r);
        ensure(r <= 1e-12 && rc.factors_positive(sol.z) && rc.overlaps_positive(sol.z), || {
            format!("point {i} widths={widths:?} {s:?}: z={} residual={r:e}", sol.z)
        })?;
        if depth == 1 {
            let cc = sol.diagnostics.cross_check.unwrap_or(f64::INFINITY);
            ensure(cc <= 1e-10, || format!("point {i}: quadratic vs bracketing differ by {cc:e}"))?;
        }
    }
    for alpha in [0.1, 0.25, 0.5, 0.75, 0.9] {
        for w in [vec![0.3], vec![2.0], vec![0.5, 4.0], vec![1.0; 5]] {
            let z = epsilon_nn(&arch(&w), &sc(alpha, 1.0, 0.0)).map_err(|e| e.to_string())?.z;
            close(&format!("z at alpha={alpha} widths={w:?}"), z.unwrap_or(f64::NAN), 1.0 - alpha, 1e-12)?;
        }
    }
    Ok(format!("1000 random points, worst residual {worst:.1e}; z = 1 - alpha at sigma2 = 1"))
}

fn nn_simulation() -> Check {
    let start = Instant::now();
    let scenarios: Vec<Scenario> = [1.0, 4.0]
        .iter()
        .flat_map(|&s2| {
            [0.0, 0.5].into_iter().flat_map(move |eta| (1..=9).map(move |k| sc(k as f64 / 10.0, s2, eta)))
        })
        .collect();
    let archs = [vec![0.5], vec![1.0], vec![2.0]];
    let rows = run_grid(&grid_points(ModelKind::Nn, &archs, &scenarios), Some(&sim(10)));
    let a = agreement(&rows)?;
    ensure(a.fraction() >= 0.95, || a.summary())?;
    within_budget(start, Duration::from_secs(120))?;
    Ok(a.summary())
}

/// `K_{n+1/2}(x) e^x sqrt(2x/pi) = sum_k (n+k)! / (k! (n-k)!) (2x)^-k`.
fn half_integer_k(n: usize, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=n {
        term *= ((n + k) * (n + 1 - k)) as f64 / (k as f64 * 2.0 * x);
        sum += term;
    }
    sum
}

/// `log K_nu(x)` from `int_0^inf exp(-x cosh t) cosh(nu t) dt`, by the
/// trapezoid rule on the shifted integrand (exponentially convergent for
/// this analytic, even integrand).
fn log_k_quadrature(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    let g = |t: f64| -x * t.cosh() + nu * t + (0.5 * (1.0 + (-2.0 * nu * t).exp())).ln();
    let t0 = (nu / x).asinh();
    let peak = g(t0).max(g(0.0));
    let h = 0.005;
    let mut sum = 0.5 * (g(0.0) - peak).exp();
    let mut t = h;
    loop {
        let v = g(t) - peak;
        sum += v.exp();
        if t > t0 && v < -60.0 {
            break;
        }
        t += h;
    }
    peak + (sum * h).ln()
}

fn bessel_ratio() -> Check {
    let ratio = |nu: f64, x: f64| bessel_k_ratio(nu, x).map_err(|e| format!("nu={nu} x={x}: {e}"));
    for n in 0..=30 {
        for x in [0.05, 0.3, 1.0, 2.0, 3.7, 10.0, 40.0, 200.0] {
            let want = half_integer_k(n + 1, x) / half_integer_k(n, x);
            close(&format!("K ratio nu={}.5 x={x}", n), ratio(n as f64 + 0.5, x)?, want, 1e-12)?;
            let neg = -(n as f64) - 0.5;
            let want = if n == 0 { 1.0 } else { half_integer_k(n - 1, x) / half_integer_k(n, x) };
            close(&format!("K ratio nu={neg} x={x}"), ratio(neg, x)?, want, 1e-12)?;
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(SEED ^ 7);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let nu = rng.gen_range(-30.0..30.0);
        let q = rng.gen_range(0.2..40.0);
        let want = (log_k_quadrature(nu + 1.0, q) - log_k_quadrature(nu, q)).exp();
        let got = ratio(nu, q)?;
        worst = worst.max(rel_err(got, want));
        close(&format!("K ratio nu={nu} x={q}"), got, want, 1e-8)?;
    }
    Ok(format!("half-integer closed forms to 1e-12; 200 quadrature points, worst {worst:.1e}"))
}

fn perturbation() -> Check {
    let scenarios: Vec<Scenario> = [0.2, 0.5, 0.8]
        .iter()
        .flat_map(|&a| {
            [0.25, 1.0, 4.0, 100.0]
                .into_iter()
                .flat_map(move |s2| [0.0, 0.5].map(|e| sc(a, s2, e)))
        })
        .collect();
    let mut n_first = 0;
    for s in &scenarios {
        for w in [vec![1.5], vec![2.0, 5.0], vec![1.0, 3.0, 30.0]] {
            if w.iter().any(|g| *g <= s.alpha()) {
                continue;
            }
            let a = arch(&w);
            let (rf, nn) = (rf_first_order(&a, s), nn_first_order(&a, s));
            ensure(rf == nn, || format!("first order differs at widths={w:?} {s:?}"))?;
            n_first += 1;
        }
        for ell in 1..=5 {
            let gamma = 4.0 * s.alpha();
            let rf = rf_series(gamma, ell, s, 2).map_err(|e| e.to_string())?;
            let nn = nn_second_order(gamma, ell, s).map_err(|e| e.to_string())?;
            ensure(rf.coefficients[0].to_bits() == nn.coefficients[0].to_bits(), || {
                format!("c1 differs at ell={ell} {s:?}")
            })?;
        }
    }

    let mut n_sum = 0;
    for s in &scenarios {
        for ell in [1, 2, 3, 5] {
            for lam in [0.05, 0.1, 0.25, 0.5] {
                let gamma = s.alpha() / lam;
                let series = rf_series(gamma, ell, s, 50).map_err(|e| e.to_string())?;
                let exact = epsilon_rf(&Architecture::uniform(gamma, ell).expect("width"), s).epsilon;
                close(&format!("order-50 sum ell={ell} lambda={lam} {s:?}"), series.value(), exact, 1e-10)?;
                n_sum += 1;
            }
        }
    }

    // truncation error ~ lambda^(k+1): doubling the width divides it by 2^(k+1)
    let mut ratios = Vec::new();
    let s = sc(0.5, 4.0, 0.0);
    for ell in [1, 3] {
        for k in 1..=3 {
            let resid = |gamma: f64| -> Result<f64, String> {
                let series = rf_series(gamma, ell, &s, k).map_err(|e| e.to_string())?;
                let exact = epsilon_rf(&Architecture::uniform(gamma, ell).expect("width"), &s).epsilon;
                Ok((exact - series.value()).abs())
            };
            let r = resid(50.0)? / resid(100.0)?;
            let want = 2f64.powi(k as i32 + 1);
            ensure((r / want - 1.0).abs() <= 0.3, || format!("RF ell={ell} order {k}: ratio {r:.3}, want {want}"))?;
            ratios.push(r);
        }
    }
    for ell in [1, 2] {
        let resid = |gamma: f64| -> Result<f64, String> {
            let series = nn_second_order(gamma, ell, &s).map_err(|e| e.to_string())?;
            let exact = epsilon_nn(&Architecture::uniform(gamma, ell).expect("width"), &s)
                .map_err(|e| e.to_string())?
                .epsilon;
            Ok((exact - series.value()).abs())
        };
        let r = resid(100.0)? / resid(200.0)?;
        ensure((r / 8.0 - 1.0).abs() <= 0.3, || format!("NN ell={ell} order 2: ratio {r:.3}, want 8"))?;
        ratios.push(r);
    }
    Ok(format!(
        "{n_first} first-order pairs identical; {n_sum} order-50 sums to 1e-10; residual ratios {:?}",
        ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
    ))
}

fn generalization_gap() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED ^ 9);
    let mut min_gap = f64::INFINITY;
    for _ in 0..1000 {
        let alpha = rng.gen_range(0.01..0.99);
        let gamma = alpha * 10f64.powf(rng.gen_range(0.001..4.0));
        let s = sc(alpha, 10f64.powf(rng.gen_range(-2.0..2.0)), rng.gen_range(0.0..2.0));
        let g = gap_exact_two_layer(gamma, &s).map_err(|e| e.to_string())?;
        min_gap = min_gap.min(g);
        ensure(g >= -1e-12, || format!("negative gap {g:e} at gamma={gamma} {s:?}"))?;
    }

    let mut worst = 0.0f64;
    for alpha in [0.2, 0.5, 0.8] {
        for s2 in [0.5, 1.0, 2.0, 4.0] {
            for eta in [0.0, 0.5] {
                let s = sc(alpha, s2, eta);
                let exact = gap_exact_two_layer(50.0 * alpha, &s).map_err(|e| e.to_string())?;
                let lead = rf_nn_gap_leading(50.0 * alpha, 1, &s).map_err(|e| e.to_string())?;
                let r = rel_err(lead, exact);
                worst = worst.max(r);
                ensure(r <= 0.25, || format!("leading gap off by {:.1}% at {s:?}", 100.0 * r))?;
            }
        }
    }

    let gammas = [1.0, 2.0, 4.0];
    let mut n_sim = 0;
    for alpha in [0.3, 0.5] {
        for s2 in [1.0, 4.0] {
            for eta in [0.0, 0.5] {
                for row in run_gapscan(&sc(alpha, s2, eta), &gammas, &sim(10)) {
                    let (m, se) = (row.gap_sim_mean, row.gap_sim_se);
                    let (m, se) = m.zip(se).ok_or_else(|| format!("no simulated gap: {:?}", row.flags))?;
                    ensure(m > 0.0 || m.abs() <= 2.0 * se, || {
                        format!("simulated gap {m:.4} +- {se:.4} at gamma={} alpha={alpha} sigma2={s2} eta={eta}", row.gamma)
                    })?;
                    n_sim += 1;
                }
            }
        }
    }
    Ok(format!(
        "min exact gap {min_gap:.1e} over 1000 points; leading order within {:.1}%; {n_sim} paired simulations",
        100.0 * worst
    ))
}

/// Golden-section minimum of `f` on `[lo, hi]`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 * hi {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

fn numerical_width_argmin(ell: usize, s: &Scenario) -> f64 {
    let f = |g: f64| epsilon_rf(&Architecture::uniform(g, ell).expect("width"), s).epsilon;
    let n = 2000;
    let (lo, hi) = (s.alpha() * 1.001, s.alpha() * 1e4);
    let grid: Vec<f64> = (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect();
    let best = (0..=n).min_by(|&i, &j| f(grid[i]).total_cmp(&f(grid[j]))).expect("grid");
    golden_min(f, grid[best.saturating_sub(1)], grid[(best + 1).min(n)])
}

fn numerical_depth_argmin(gamma: f64, s: &Scenario) -> Result<Vec<usize>, String> {
    let vals: Vec<f64> = (0..=50)
        .map(|l| rf_depth_continuation(gamma, l as f64, s).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((0..=50).filter(|&l| vals[l] - min <= 1e-10 * min.abs()).collect())
}

fn optimal_architecture() -> Check {
    let mut worst = 0.0f64;
    for ell in [1, 2, 3, 5] {
        for st2 in [2.0, 4.0, 9.0] {
            for alpha in [0.2, 0.5, 0.8] {
                let s = sc(alpha, st2, 0.0);
                let rep = rf_optimal_width(ell, &s).map_err(|e| e.to_string())?;
                let Some(Optimum::Width(g)) = rep.optimum else {
                    return Err(format!("no finite optimum at ell={ell} {s:?}"));
                };
                let num = numerical_width_argmin(ell, &s);
                worst = worst.max(rel_err(num, g));
                close(&format!("width argmin ell={ell} {s:?}"), num, g, 1e-6)?;
            }
        }
    }

    let mut n_depth = 0;
    let mut n_ties = 0;
    let alpha = 0.5;
    let mut cases: Vec<(f64, Scenario)> = Vec::new();
    for s2 in [0.5, 1.0, 2.0, 4.0, 9.0, 16.0] {
        for eta in [0.0, 0.5] {
            for gamma in [0.6, 0.75, 1.5, 2.5, 5.0, 8.0] {
                cases.push((gamma, sc(alpha, s2, eta)));
            }
        }
    }
    // integer ratios: gamma = t alpha / (t - 1) with t = sigma~^(2/j)
    for st2 in [4.0f64, 9.0] {
        for j in 1..=4 {
            let t = st2.powf(1.0 / j as f64);
            cases.push((t * alpha / (t - 1.0), sc(alpha, st2, 0.0)));
        }
    }
    for (gamma, s) in cases {
        let rep = rf_optimal_depth(gamma, &s).map_err(|e| e.to_string())?;
        let Some(Optimum::Depth(set)) = rep.optimum else {
            return Err(format!("no depth optimum at gamma={gamma} {s:?}"));
        };
        let num = numerical_depth_argmin(gamma, &s)?;
        ensure(num == set, || format!("depth argmin {num:?} vs {set:?} at gamma={gamma} {s:?}"))?;
        n_depth += 1;
        n_ties += usize::from(set.len() == 2);
    }

    for ell in [2, 3, 5] {
        for s2 in [2.0, 4.0, 9.0] {
            let s = sc(0.5, s2, 0.0);
            let rep = verify_stationarity(ell, &s).map_err(|e| e.to_string())?;
            ensure(rep.passed(), || {
                format!(
                    "stationarity at ell={ell} {s:?}: {:?} (eigenvalues {:?}, expected {:?})",
                    rep.failure, rep.eigenvalues, rep.expected
                )
            })?;
            let small = rep.eigenvalues.iter().filter(|e| rel_err(**e, rep.lambda) <= 1e-3).count();
            let large = rep
                .eigenvalues
                .iter()
                .filter(|e| rel_err(**e, (ell as f64 + 1.0) * rep.lambda) <= 1e-3)
                .count();
            ensure(small == ell - 1 && large == 1, || {
                format!("multiplicities ({small}, {large}) at ell={ell} {s:?}")
            })?;
        }
    }

    for (s2, expect) in
        [(0.25, Regime::WiderAlwaysBetter), (1.0, Regime::WidthIrrelevant), (4.0, Regime::NarrowerAlwaysBetter)]
    {
        let s = sc(alpha, s2, 0.0);
        let rep = nn_width_monotonicity(&s).map_err(|e| e.to_string())?;
        ensure(rep.regime == expect, || format!("NN regime {:?} at {s:?}", rep.regime))?;
        let (lo, hi) = (alpha + 0.01, 1e4);
        let eps: Vec<f64> = (0..200)
            .map(|i| {
                let g = lo * (hi / lo).powf(i as f64 / 199.0);
                epsilon_nn(&arch(&[g]), &s).map(|r| r.epsilon).map_err(|e| e.to_string())
            })
            .collect::<Result<_, _>>()?;
        let tol = 1e-13 * eps[0].abs().max(1.0);
        let ok = eps.windows(2).all(|w| match expect {
            Regime::WiderAlwaysBetter => w[1] < w[0] + tol,
            Regime::NarrowerAlwaysBetter => w[1] > w[0] - tol,
            _ => (w[1] - w[0]).abs() <= tol,
        });
        let ends = match expect {
            Regime::WiderAlwaysBetter => eps[199] < eps[0],
            Regime::NarrowerAlwaysBetter => eps[199] > eps[0],
            _ => true,
        };
        ensure(ok && ends, || format!("NN curve not {} at {s:?}", expect.label()))?;
    }

    Ok(format!(
        "width argmin within {worst:.1e}; {n_depth} depth argmins ({n_ties} ties); Hessians at ell in {{2,3,5}}; NN monotonicity"
    ))
}

const DETERMINISM_CONFIG: &str = r#"
model = "rf"
[axes]
alpha = { from = 0.1, to = 1.9, points = 7 }
sigma2 = [1.0, 4.0]
eta = [0.0, 0.5]
gamma = [0.5, 2.0]
depth = [1, 2]
[sim]
d = 40
n_reps = 4
base_seed = 11
"#;

fn determinism() -> Check {
    let cfg = SweepConfig::parse(DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let points = cfg.points();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for (i, threads) in [None, Some(1), None].into_iter().enumerate() {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| e.to_string())?;
        let rows = pool.install(|| run_grid(&points, cfg.sim.as_ref()));
        for format in [Format::Csv, Format::Jsonl] {
            let path = dir.path().join(format!("run{i}-{format:?}"));
            write_atomic(&path, &render_table(&rows, format, &[])).map_err(|e| e.to_string())?;
            files.push((format, std::fs::read(&path).map_err(|e| e.to_string())?));
        }
    }
    for (format, bytes) in &files[2..] {
        let first = &files.iter().find(|(f, _)| f == format).expect("first run").1;
        ensure(bytes == first, || format!("{format:?} output differs between runs"))?;
    }
    Ok(format!("{} rows, 3 runs (default and single-thread pools), CSV and JSON lines byte-identical", points.len()))
}
