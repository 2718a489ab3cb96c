//! Evaluation of grid points: theory, optional simulation, and the row
//! types written by the command-line tool.

use rayon::prelude::*;

use super::config::{GridPoint, SimSettings};
use super::output::{
    parse_list, parse_num, parse_opt_int, parse_opt_num, Cell, Record,
};
use crate::error::Error;
use crate::model::{Architecture, ModelKind, Scenario};
use crate::optimal::{Optimum, WidthRegimeReport};
use crate::perturbation::gap_exact_two_layer;
use crate::sim::{realized_width, rng::splitmix64, simulate_gap_two_layer, simulate_model};
use crate::theory::epsilon;

/// Row flags.
pub mod flag {
    pub const BOUNDARY: &str = "boundary";
    pub const DIVERGENT: &str = "divergent";
    pub const MULTIPLE_ROOTS: &str = "multiple_roots";
    pub const SIM_UNSUPPORTED: &str = "sim_unsupported";
    pub const INVALID: &str = "invalid_parameter";
    pub const DOMAIN: &str = "domain_error";
    pub const NO_PHYSICAL_ROOT: &str = "no_physical_root";
    pub const ILL_CONDITIONED: &str = "ill_conditioned";
    pub const REGIME_AMBIGUOUS: &str = "regime_ambiguous";
}

fn error_flag(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter(_) => flag::INVALID,
        Error::Domain(_) => flag::DOMAIN,
        Error::NoPhysicalRoot { .. } => flag::NO_PHYSICAL_ROOT,
        Error::IllConditioned { .. } => flag::ILL_CONDITIONED,
        Error::RegimeAmbiguous(_) => flag::REGIME_AMBIGUOUS,
    }
}

fn is_numerical_flag(f: &str) -> bool {
    f == flag::NO_PHYSICAL_ROOT || f == flag::ILL_CONDITIONED
}

/// Simulation columns of a [`ResultRow`].
#[derive(Clone, Debug, PartialEq)]
pub struct SimColumns {
    pub d: u64,
    pub p: u64,
    /// Simulated hidden widths `round(gamma_l d)`.
    pub widths: Vec<u64>,
    /// Realized ratios `n_l / d`.
    pub width_ratios: Vec<f64>,
    pub mean: Option<f64>,
    pub se: Option<f64>,
    pub n_reps: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub model: String,
    /// Requested width ratios, in layer order.
    pub widths: Vec<f64>,
    pub alpha: f64,
    pub sigma2: f64,
    pub eta: f64,
    pub phase: String,
    /// Absent when the theory could not be evaluated.
    pub epsilon_theory: Option<f64>,
    pub z: Option<f64>,
    pub sim: Option<SimColumns>,
    pub flags: Vec<String>,
}

impl ResultRow {
    pub fn has_numerical_failure(&self) -> bool {
        self.flags.iter().any(|f| is_numerical_flag(f))
    }
}

impl Record for ResultRow {
    const COLUMNS: &'static [&'static str] = &[
        "model",
        "depth",
        "widths",
        "alpha",
        "sigma2",
        "eta",
        "phase",
        "epsilon_theory",
        "z",
        "sim_d",
        "sim_p",
        "sim_widths",
        "sim_width_ratios",
        "epsilon_sim_mean",
        "epsilon_sim_se",
        "n_reps",
        "seed",
        "flags",
    ];

    fn cells(&self) -> Vec<Cell> {
        let opt = |x: Option<f64>| x.map_or(Cell::Empty, Cell::Num);
        let mut cells = vec![
            Cell::Text(self.model.clone()),
            Cell::Int(self.widths.len() as u64),
            Cell::Nums(self.widths.clone()),
            Cell::Num(self.alpha),
            Cell::Num(self.sigma2),
            Cell::Num(self.eta),
            Cell::Text(self.phase.clone()),
            opt(self.epsilon_theory),
            opt(self.z),
        ];
        match &self.sim {
            Some(s) => cells.extend([
                Cell::Int(s.d),
                Cell::Int(s.p),
                Cell::Ints(s.widths.clone()),
                Cell::Nums(s.width_ratios.clone()),
                opt(s.mean),
                opt(s.se),
                Cell::Int(s.n_reps),
                Cell::Int(s.seed),
            ]),
            None => cells.extend(std::iter::repeat_n(Cell::Empty, 8)),
        }
        cells.push(Cell::Texts(self.flags.clone()));
        cells
    }

    fn from_text(c: &[&str]) -> Result<Self, String> {
        if c.len() != Self::COLUMNS.len() {
            return Err(format!("expected {} cells, got {}", Self::COLUMNS.len(), c.len()));
        }
        let widths = parse_list(c[2], parse_num)?;
        let depth: usize = c[1].parse().map_err(|_| format!("bad depth '{}'", c[1]))?;
        if depth != widths.len() {
            return Err(format!("depth {depth} does not match widths '{}'", c[2]));
        }
        let sim = match parse_opt_int(c[9])? {
            None => None,
            Some(d) => Some(SimColumns {
                d,
                p: parse_opt_int(c[10])?.ok_or("missing sim_p")?,
                widths: parse_list(c[11], |s| {
                    s.parse().map_err(|_| format!("bad integer '{s}'"))
                })?,
                width_ratios: parse_list(c[12], parse_num)?,
                mean: parse_opt_num(c[13])?,
                se: parse_opt_num(c[14])?,
                n_reps: parse_opt_int(c[15])?.ok_or("missing n_reps")?,
                seed: parse_opt_int(c[16])?.ok_or("missing seed")?,
            }),
        };
        Ok(ResultRow {
            model: c[0].to_string(),
            widths,
            alpha: parse_num(c[3])?,
            sigma2: parse_num(c[4])?,
            eta: parse_num(c[5])?,
            phase: c[6].to_string(),
            epsilon_theory: parse_opt_num(c[7])?,
            z: parse_opt_num(c[8])?,
            sim,
            flags: parse_list(c[17], |s| Ok(s.to_string()))?,
        })
    }
}

/// Seed of one grid point: a hash of the base seed and the point's
/// parameters. It does not depend on where the point sits in the grid, so
/// adding axis values leaves the seeds of existing points unchanged.
pub fn point_seed(base: u64, point: &GridPoint) -> u64 {
    let s = &point.scenario;
    let model_id = match point.model {
        ModelKind::Lr => 1,
        ModelKind::Rf(_) => 2,
        ModelKind::Nn(_) => 3,
    };
    let widths = point.model.architecture().map(|a| a.widths().to_vec()).unwrap_or_default();
    std::iter::once(model_id)
        .chain(std::iter::once(widths.len() as u64))
        .chain(widths.iter().map(|w| w.to_bits()))
        .chain([s.alpha(), s.sigma2(), s.eta()].map(f64::to_bits))
        .fold(splitmix64(base), |h, x| splitmix64(h ^ x))
}

/// Theory and, when `sim` is given, simulation at one grid point. Failures
/// are recorded as flags on the row.
pub fn evaluate_point(point: &GridPoint, sim: Option<&SimSettings>) -> ResultRow {
    let s = &point.scenario;
    let widths = point.model.architecture().map(|a| a.widths().to_vec()).unwrap_or_default();
    let mut flags = Vec::new();
    let (phase, epsilon_theory, z) = match epsilon(&point.model, s) {
        Ok(r) => {
            if r.is_boundary() {
                flags.push(flag::BOUNDARY.to_string());
            }
            if r.diagnostics.divergent {
                flags.push(flag::DIVERGENT.to_string());
            }
            if r.diagnostics.multiple_roots {
                flags.push(flag::MULTIPLE_ROOTS.to_string());
            }
            (r.phase.to_string(), Some(r.epsilon), r.z)
        }
        Err(e) => {
            flags.push(error_flag(&e).to_string());
            (String::new(), None, None)
        }
    };

    let sim = sim.map(|cfg| {
        let seed = point_seed(cfg.base_seed, point);
        let n_widths: Vec<u64> =
            widths.iter().map(|g| realized_width(*g, cfg.d) as u64).collect();
        let p = realized_width(s.alpha(), cfg.d) as u64;
        let est = simulate_model(&point.model, s, cfg.d, cfg.n_reps, seed);
        let (mean, se) = match est {
            Ok(Some(e)) => (Some(e.mean), Some(e.se)),
            Ok(None) => {
                flags.push(flag::SIM_UNSUPPORTED.to_string());
                (None, None)
            }
            Err(e) => {
                let f = error_flag(&e).to_string();
                if !flags.contains(&f) {
                    flags.push(f);
                }
                (None, None)
            }
        };
        SimColumns {
            d: cfg.d as u64,
            p,
            width_ratios: n_widths.iter().map(|n| *n as f64 / cfg.d as f64).collect(),
            widths: n_widths,
            mean,
            se,
            n_reps: cfg.n_reps as u64,
            seed,
        }
    });

    ResultRow {
        model: point.model.name().to_string(),
        widths,
        alpha: s.alpha(),
        sigma2: s.sigma2(),
        eta: s.eta(),
        phase,
        epsilon_theory,
        z,
        sim,
        flags,
    }
}

/// Evaluate every point in parallel; rows come back in grid order.
pub fn run_grid(points: &[GridPoint], sim: Option<&SimSettings>) -> Vec<ResultRow> {
    points.par_iter().map(|p| evaluate_point(p, sim)).collect()
}

/// Row of the `gapscan` command.
#[derive(Clone, Debug, PartialEq)]
pub struct GapRow {
    pub gamma: f64,
    pub n1: u64,
    pub realized_gamma: f64,
    pub gap_theory: Option<f64>,
    pub gap_sim_mean: Option<f64>,
    pub gap_sim_se: Option<f64>,
    pub n_reps: u64,
    pub seed: u64,
    pub flags: Vec<String>,
}

impl GapRow {
    pub fn has_numerical_failure(&self) -> bool {
        self.flags.iter().any(|f| is_numerical_flag(f))
    }
}

impl Record for GapRow {
    const COLUMNS: &'static [&'static str] = &[
        "gamma",
        "n1",
        "realized_gamma",
        "gap_theory",
        "gap_sim_mean",
        "gap_sim_se",
        "n_reps",
        "seed",
        "flags",
    ];

    fn cells(&self) -> Vec<Cell> {
        let opt = |x: Option<f64>| x.map_or(Cell::Empty, Cell::Num);
        vec![
            Cell::Num(self.gamma),
            Cell::Int(self.n1),
            Cell::Num(self.realized_gamma),
            opt(self.gap_theory),
            opt(self.gap_sim_mean),
            opt(self.gap_sim_se),
            Cell::Int(self.n_reps),
            Cell::Int(self.seed),
            Cell::Texts(self.flags.clone()),
        ]
    }

    fn from_text(c: &[&str]) -> Result<Self, String> {
        if c.len() != Self::COLUMNS.len() {
            return Err(format!("expected {} cells, got {}", Self::COLUMNS.len(), c.len()));
        }
        let int = |s: &str| parse_opt_int(s)?.ok_or_else(|| "missing integer".to_string());
        Ok(GapRow {
            gamma: parse_num(c[0])?,
            n1: int(c[1])?,
            realized_gamma: parse_num(c[2])?,
            gap_theory: parse_opt_num(c[3])?,
            gap_sim_mean: parse_opt_num(c[4])?,
            gap_sim_se: parse_opt_num(c[5])?,
            n_reps: int(c[6])?,
            seed: int(c[7])?,
            flags: parse_list(c[8], |s| Ok(s.to_string()))?,
        })
    }
}

/// Exact and simulated RF-NN gap for one hidden layer over `gammas`. Both
/// models see the same inputs, teacher and noise in each replicate.
pub fn run_gapscan(s: &Scenario, gammas: &[f64], sim: &SimSettings) -> Vec<GapRow> {
    let d = sim.d;
    let p = realized_width(s.alpha(), d);
    gammas
        .par_iter()
        .map(|&g| {
            let mut flags = Vec::new();
            let gap_theory = gap_exact_two_layer(g, s).map_err(|e| flags.push(error_flag(&e).to_string())).ok();
            let n1 = realized_width(g, d);
            let point = GridPoint {
                model: ModelKind::Rf(Architecture::new(vec![g]).expect("positive width")),
                scenario: *s,
            };
            let seed = point_seed(sim.base_seed, &point);
            let est = simulate_gap_two_layer(n1, d, p, s, sim.n_reps, seed);
            let (gap_sim_mean, gap_sim_se) = match est {
                Ok(e) => (Some(e.mean), Some(e.se)),
                Err(e) => {
                    let f = error_flag(&e).to_string();
                    if !flags.contains(&f) {
                        flags.push(f);
                    }
                    (None, None)
                }
            };
            GapRow {
                gamma: g,
                n1: n1 as u64,
                realized_gamma: n1 as f64 / d as f64,
                gap_theory,
                gap_sim_mean,
                gap_sim_se,
                n_reps: sim.n_reps as u64,
                seed,
                flags,
            }
        })
        .collect()
}

/// Row of the `optimal` command.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalRow {
    pub model: String,
    pub alpha: f64,
    pub sigma2: f64,
    pub eta: f64,
    /// `depth=<l>`, `width=<gamma>` or `width_derivative`.
    pub query: String,
    pub report: WidthRegimeReport,
}

impl Record for OptimalRow {
    const COLUMNS: &'static [&'static str] =
        &["model", "alpha", "sigma2", "eta", "query", "regime", "optimum", "sigma_tilde2"];

    fn cells(&self) -> Vec<Cell> {
        let optimum = match &self.report.optimum {
            None => Cell::Empty,
            Some(Optimum::Width(g)) => Cell::Num(*g),
            Some(Optimum::Depth(ls)) => Cell::Ints(ls.iter().map(|l| *l as u64).collect()),
        };
        vec![
            Cell::Text(self.model.clone()),
            Cell::Num(self.alpha),
            Cell::Num(self.sigma2),
            Cell::Num(self.eta),
            Cell::Text(self.query.clone()),
            Cell::Text(self.report.regime.label().to_string()),
            optimum,
            Cell::Num(self.report.sigma_tilde),
        ]
    }

    fn from_text(_: &[&str]) -> Result<Self, String> {
        Err("optimal rows are write-only".to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::output::{parse_csv, parse_jsonl, render_table};
    use crate::harness::config::Format;

    fn point(m: ModelKind, a: f64) -> GridPoint {
        GridPoint { model: m, scenario: Scenario::new(a, 1.0, 0.5).unwrap() }
    }

    #[test]
    fn seeds_depend_on_parameters_only() {
        let arch = Architecture::new(vec![0.5, 2.0]).unwrap();
        let a = point(ModelKind::Rf(arch.clone()), 0.3);
        assert_eq!(point_seed(4, &a), point_seed(4, &a.clone()));
        assert_ne!(point_seed(4, &a), point_seed(5, &a));
        assert_ne!(point_seed(4, &a), point_seed(4, &point(ModelKind::Nn(arch), 0.3)));
        assert_ne!(point_seed(4, &a), point_seed(4, &point(ModelKind::Lr, 0.3)));
    }

    #[test]
    fn rows_round_trip() {
        let sim = SimSettings { d: 30, n_reps: 3, base_seed: 1 };
        let pts = [
            point(ModelKind::Lr, 1.0),
            point(ModelKind::Rf(Architecture::new(vec![0.5]).unwrap()), 0.8),
            point(ModelKind::Nn(Architecture::new(vec![0.7, 2.0]).unwrap()), 0.3),
            point(ModelKind::Nn(Architecture::new(vec![0.7]).unwrap()), 1.0 / 3.0),
        ];
        let rows = run_grid(&pts, Some(&sim));
        assert!(rows[0].flags.contains(&flag::BOUNDARY.to_string()));
        assert!(rows[2].flags.contains(&flag::SIM_UNSUPPORTED.to_string()));
        let csv = render_table(&rows, Format::Csv, &[]);
        let back: Vec<ResultRow> = parse_csv(std::str::from_utf8(&csv).unwrap()).unwrap();
        assert_eq!(format!("{rows:?}"), format!("{back:?}"));
        let jl = render_table(&rows, Format::Jsonl, &[("note", "x".into())]);
        let back: Vec<ResultRow> = parse_jsonl(std::str::from_utf8(&jl).unwrap()).unwrap();
        assert_eq!(format!("{rows:?}"), format!("{back:?}"));
    }
}
