use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use dlc_core::harness::config::{linspace, Format, GridPoint, ModelName, SimSettings, SweepConfig};
use dlc_core::harness::output::{render_table, write_atomic, Record};
use dlc_core::harness::run::{evaluate_point, run_gapscan, run_grid, OptimalRow};
use dlc_core::harness::{exit, init_threads, selftest, threads_from_env, HarnessError};
use dlc_core::optimal::{nn_width_monotonicity, rf_optimal_depth, rf_optimal_width};
use dlc_core::sim::{DEFAULT_D, DEFAULT_REPS};
use dlc_core::{Architecture, Scenario};

/// Learning curves of deep Bayesian linear models: theory, simulation and
/// optimal architectures.
#[derive(Parser)]
#[command(name = "dlc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the theoretical error at one point.
    Theory {
        #[arg(long)]
        model: ModelName,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Hidden width ratios, comma separated (rf and nn only).
        #[arg(long, value_delimiter = ',')]
        widths: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a parameter sweep described by a TOML file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Optimal width (given --depth) or depth (given --width); for nn, the
    /// sign of the width dependence.
    Optimal {
        #[arg(long)]
        model: ModelName,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, conflicts_with = "width")]
        depth: Option<usize>,
        #[arg(long)]
        width: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact and simulated RF-NN gap for one hidden layer over a width range.
    Gapscan {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `lo:hi:n`, geometrically spaced.
        #[arg(long)]
        gammas: String,
        #[arg(long, default_value_t = DEFAULT_D)]
        d: usize,
        #[arg(long, default_value_t = DEFAULT_REPS)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the acceptance checks.
    Selftest {
        /// Criterion ids to run, comma separated (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    sigma2: f64,
    #[arg(long)]
    eta: f64,
}

impl ScenarioArgs {
    fn scenario(&self) -> Result<Scenario, HarnessError> {
        Scenario::new(self.alpha, self.sigma2, self.eta).map_err(|e| HarnessError::Usage(e.to_string()))
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output file, or `-` for standard output.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    format: Option<Format>,
}

fn emit<R: Record>(rows: &[R], format: Format, out: Option<&Path>, meta: &[(&str, String)]) -> anyhow::Result<()> {
    let bytes = render_table(rows, format, meta);
    match out {
        Some(path) => {
            write_atomic(path, &bytes).map_err(HarnessError::from).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().lock().write_all(&bytes).map_err(HarnessError::from)?;
            Ok(())
        }
    }
}

fn out_path(arg: Option<&str>) -> Option<PathBuf> {
    arg.filter(|p| *p != "-").map(PathBuf::from)
}

fn theory(model: ModelName, s: Scenario, widths: Vec<f64>, out: OutArgs) -> anyhow::Result<i32> {
    let arch = match (model, widths.is_empty()) {
        (ModelName::Lr, true) => None,
        (ModelName::Lr, false) => return Err(HarnessError::Usage("model lr takes no --widths".into()).into()),
        (_, true) => return Err(HarnessError::Usage(format!("model {model} needs --widths")).into()),
        (_, false) => Some(Architecture::new(widths).map_err(|e| HarnessError::Usage(e.to_string()))?),
    };
    let point = GridPoint { model: model.with_architecture(arch), scenario: s };
    let row = evaluate_point(&point, None);
    emit(std::slice::from_ref(&row), out.format.unwrap_or_default(), out_path(out.out.as_deref()).as_deref(), &[])?;
    if row.has_numerical_failure() {
        eprintln!("error: numerical failure ({})", row.flags.join(", "));
        return Ok(exit::NUMERICAL);
    }
    if row.epsilon_theory.is_none() || row.flags.iter().any(|f| f == "boundary") {
        eprintln!("error: no finite error at this point ({})", row.flags.join(", "));
        return Ok(exit::DOMAIN);
    }
    Ok(exit::OK)
}

fn sweep(config: &Path, out: OutArgs) -> anyhow::Result<i32> {
    let text = std::fs::read_to_string(config)
        .map_err(HarnessError::from)
        .with_context(|| format!("reading {}", config.display()))?;
    let cfg = SweepConfig::parse(&text).map_err(HarnessError::from)?;
    let format = out.format.unwrap_or(cfg.format);
    let path = match out.out.as_deref() {
        Some(p) => out_path(Some(p)),
        None => cfg.output.clone(),
    };
    let points = cfg.points();
    let rows = run_grid(&points, cfg.sim.as_ref());
    let mut meta = vec![("model", cfg.model.to_string()), ("points", points.len().to_string())];
    if let Some(s) = &cfg.sim {
        meta.extend([("d", s.d.to_string()), ("n_reps", s.n_reps.to_string()), ("base_seed", s.base_seed.to_string())]);
    }
    emit(&rows, format, path.as_deref(), &meta)?;
    let failed = rows.iter().filter(|r| r.has_numerical_failure()).count();
    if failed > 0 {
        eprintln!("error: numerical failure at {failed} of {} points (flagged in the output)", rows.len());
        return Ok(exit::NUMERICAL);
    }
    Ok(exit::OK)
}

fn optimal(model: ModelName, s: Scenario, depth: Option<usize>, width: Option<f64>, out: OutArgs) -> anyhow::Result<i32> {
    let (report, query) = match (model, depth, width) {
        (ModelName::Rf, Some(l), None) => (rf_optimal_width(l, &s), format!("depth={l}")),
        (ModelName::Rf, None, Some(g)) => (rf_optimal_depth(g, &s), format!("width={g}")),
        (ModelName::Rf, ..) => return Err(HarnessError::Usage("model rf needs --depth or --width".into()).into()),
        (ModelName::Nn, None, None) => (nn_width_monotonicity(&s), "width_derivative".to_string()),
        (ModelName::Nn, ..) => return Err(HarnessError::Usage("model nn takes no --depth or --width".into()).into()),
        (ModelName::Lr, ..) => return Err(HarnessError::Usage("optimal needs model rf or nn".into()).into()),
    };
    let row = OptimalRow {
        model: model.to_string(),
        alpha: s.alpha(),
        sigma2: s.sigma2(),
        eta: s.eta(),
        query,
        report: report.map_err(HarnessError::from)?,
    };
    emit(&[row], out.format.unwrap_or_default(), out_path(out.out.as_deref()).as_deref(), &[])?;
    Ok(exit::OK)
}

fn parse_gammas(spec: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = || HarnessError::Usage(format!("--gammas must be lo:hi:n with 0 < lo <= hi and n >= 1, got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts[..] else { return Err(bad()) };
    let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
    let n: usize = n.parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite() && n >= 1) || (n == 1 && hi != lo) {
        return Err(bad());
    }
    Ok(linspace(lo, hi, n, true))
}

fn gapscan(s: Scenario, gammas: &str, sim: SimSettings, out: OutArgs) -> anyhow::Result<i32> {
    let gammas = parse_gammas(gammas)?;
    if let Some(g) = gammas.iter().find(|g| **g <= s.alpha()) {
        return Err(HarnessError::Usage(format!("every width must exceed alpha = {}, got {g}", s.alpha())).into());
    }
    if s.alpha() >= 1.0 {
        return Err(HarnessError::Core(dlc_core::Error::Domain("the gap is defined for alpha < 1".into())).into());
    }
    if sim.d < 2 || sim.n_reps < 2 {
        return Err(HarnessError::Usage("--d and --reps must be at least 2".into()).into());
    }
    let rows = run_gapscan(&s, &gammas, &sim);
    let meta = [
        ("alpha", s.alpha().to_string()),
        ("sigma2", s.sigma2().to_string()),
        ("eta", s.eta().to_string()),
        ("d", sim.d.to_string()),
        ("n_reps", sim.n_reps.to_string()),
        ("base_seed", sim.base_seed.to_string()),
        ("pairing", "rf and nn share inputs, teacher and noise in every replicate".to_string()),
    ];
    emit(&rows, out.format.unwrap_or_default(), out_path(out.out.as_deref()).as_deref(), &meta)?;
    let failed = rows.iter().filter(|r| r.has_numerical_failure()).count();
    Ok(if failed > 0 { exit::NUMERICAL } else { exit::OK })
}

fn selftest(only: &[u32]) -> anyhow::Result<i32> {
    if let Some(id) = only.iter().find(|id| !selftest::CRITERIA.iter().any(|c| c.id == **id)) {
        return Err(HarnessError::Usage(format!("no criterion {id}")).into());
    }
    let mut failed = 0;
    for c in selftest::CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let o = selftest::run_criterion(c);
        println!("{}", o.line());
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        return Ok(exit::NUMERICAL);
    }
    Ok(exit::OK)
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    init_threads(threads_from_env()?);
    match cli.command {
        Command::Theory { model, scenario, widths, out } => theory(model, scenario.scenario()?, widths, out),
        Command::Sweep { config, out } => sweep(&config, out),
        Command::Optimal { model, scenario, depth, width, out } => {
            optimal(model, scenario.scenario()?, depth, width, out)
        }
        Command::Gapscan { scenario, gammas, d, reps, seed, out } => {
            gapscan(scenario.scenario()?, &gammas, SimSettings { d, n_reps: reps, base_seed: seed }, out)
        }
        Command::Selftest { only } => selftest(&only),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        e.downcast_ref::<HarnessError>().map_or(exit::USAGE, HarnessError::exit_code)
    });
    ExitCode::from(code as u8)
}
