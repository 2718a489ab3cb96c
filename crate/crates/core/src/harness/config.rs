//! Sweep configuration: a TOML file with a model name and up to four
//! tables.
//!
//! ```toml
//! model = "rf"                 # lr | rf | nn
//!
//! [axes]
//! alpha = { from = 0.1, to = 2.0, points = 20 }
//! sigma2 = [1.0]
//! eta = [0.0, 0.5]
//! gamma = [0.5, 1.0, 2.0]      # every layer gets the same width ...
//! depth = [1, 2]
//! # widths = [[0.5, 2.0], [2.0, 0.5]]   # ... or list each architecture
//!
//! [sim]                        # optional; omit for theory only
//! d = 100
//! n_reps = 10
//! base_seed = 7
//!
//! [output]
//! path = "out.csv"             # "-" or absent for standard output
//! format = "csv"               # csv | jsonl
//! ```
//!
//! An axis is a number, a list of numbers, or a table
//! `{ from, to, points, spacing = "linear" | "log" }` with both ends
//! included. Validation reports every problem found, not only the first.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::model::{Architecture, ModelKind, Scenario};
use crate::sim::{DEFAULT_D, DEFAULT_REPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Lr,
    Rf,
    Nn,
}

impl FromStr for ModelName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lr" => Ok(ModelName::Lr),
            "rf" => Ok(ModelName::Rf),
            "nn" => Ok(ModelName::Nn),
            other => Err(format!("unknown model '{other}', expected lr, rf or nn")),
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelName::Lr => "lr",
            ModelName::Rf => "rf",
            ModelName::Nn => "nn",
        })
    }
}

impl ModelName {
    pub fn with_architecture(self, arch: Option<Architecture>) -> ModelKind {
        match (self, arch) {
            (ModelName::Rf, Some(a)) => ModelKind::Rf(a),
            (ModelName::Nn, Some(a)) => ModelKind::Nn(a),
            _ => ModelKind::Lr,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format '{other}', expected csv or jsonl")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ArchAxis {
    /// LR: no hidden layers.
    None,
    /// `depth` layers of width `gamma`, over every pair.
    Broadcast { gamma: Vec<f64>, depth: Vec<usize> },
    /// Explicit width lists.
    PerLayer(Vec<Vec<f64>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimSettings {
    pub d: usize,
    pub n_reps: usize,
    pub base_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub model: ModelName,
    pub alpha: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub eta: Vec<f64>,
    pub arch: ArchAxis,
    pub sim: Option<SimSettings>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

/// One grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub model: ModelKind,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration:\n  {}", .0.join("\n  "))]
pub struct ConfigError(pub Vec<String>);

struct Checker {
    errors: Vec<String>,
}

impl Checker {
    fn err(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn unknown_keys(&mut self, table: &Table, prefix: &str, known: &[&str]) {
        for k in table.keys() {
            if !known.contains(&k.as_str()) {
                self.err(format!("unknown key '{prefix}{k}'"));
            }
        }
    }

    fn subtable<'a>(&mut self, root: &'a Table, key: &str) -> Option<&'a Table> {
        match root.get(key) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.err(format!("'{key}' must be a table"));
                None
            }
        }
    }

    fn number(&mut self, v: &Value, key: &str) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.err(format!("'{key}' must be a number, got {v}"));
                None
            }
        }
    }

    fn count(&mut self, v: &Value, key: &str, min: i64) -> Option<u64> {
        match v {
            Value::Integer(i) if *i >= min => Some(*i as u64),
            _ => {
                self.err(format!("'{key}' must be an integer >= {min}, got {v}"));
                None
            }
        }
    }

    /// A number, list of numbers, or `{ from, to, points, spacing }`.
    fn axis(&mut self, v: &Value, key: &str) -> Vec<f64> {
        match v {
            Value::Array(items) => items
                .iter()
                .enumerate()
                .filter_map(|(i, x)| self.number(x, &format!("{key}[{i}]")))
                .collect(),
            Value::Table(t) => self.range(t, key),
            other => self.number(other, key).into_iter().collect(),
        }
    }

    fn range(&mut self, t: &Table, key: &str) -> Vec<f64> {
        self.unknown_keys(t, &format!("{key}."), &["from", "to", "points", "spacing"]);
        let get = |c: &mut Self, k: &str| match t.get(k) {
            Some(v) => c.number(v, &format!("{key}.{k}")),
            None => {
                c.err(format!("'{key}' range needs '{k}'"));
                None
            }
        };
        let from = get(self, "from");
        let to = get(self, "to");
        let points = match t.get("points") {
            Some(v) => self.count(v, &format!("{key}.points"), 1),
            None => {
                self.err(format!("'{key}' range needs 'points'"));
                None
            }
        };
        let log = match t.get("spacing").map(|v| v.as_str()) {
            None | Some(Some("linear")) => false,
            Some(Some("log")) => true,
            Some(_) => {
                self.err(format!("'{key}.spacing' must be \"linear\" or \"log\""));
                false
            }
        };
        let (Some(from), Some(to), Some(n)) = (from, to, points) else {
            return Vec::new();
        };
        if log && !(from > 0.0 && to > 0.0) {
            self.err(format!("'{key}' log range needs positive ends"));
            return Vec::new();
        }
        linspace(from, to, n as usize, log)
    }

    fn positive(&mut self, values: &[f64], key: &str, allow_zero: bool) {
        for v in values {
            let ok = v.is_finite() && (*v > 0.0 || allow_zero && *v == 0.0);
            if !ok {
                let bound = if allow_zero { "non-negative" } else { "positive" };
                self.err(format!("'{key}' values must be {bound}, got {v}"));
            }
        }
    }

    fn non_empty<T>(&mut self, values: &[T], key: &str) {
        if values.is_empty() {
            self.err(format!("axis '{key}' is empty"));
        }
    }
}

/// `n` points from `from` to `to` inclusive, evenly spaced in value or in
/// logarithm.
pub fn linspace(from: f64, to: f64, n: usize, log: bool) -> Vec<f64> {
    if n == 1 {
        return vec![from];
    }
    let (a, b) = if log { (from.ln(), to.ln()) } else { (from, to) };
    (0..n)
        .map(|i| {
            if i == 0 {
                return from;
            }
            if i == n - 1 {
                return to;
            }
            let x = a + (b - a) * i as f64 / (n - 1) as f64;
            if log {
                x.exp()
            } else {
                x
            }
        })
        .collect()
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| {
            ConfigError(vec![format!("not valid TOML: {}", e.message())])
        })?;
        let mut c = Checker { errors: Vec::new() };
        c.unknown_keys(&root, "", &["model", "axes", "sim", "output"]);

        let model = match root.get("model") {
            Some(Value::String(s)) => s.parse::<ModelName>().map_err(|e| c.err(e)).ok(),
            Some(v) => {
                c.err(format!("'model' must be a string, got {v}"));
                None
            }
            None => {
                c.err("missing key 'model'");
                None
            }
        };

        let empty = Table::new();
        let axes = c.subtable(&root, "axes").unwrap_or_else(|| {
            if !root.contains_key("axes") {
                c.err("missing table [axes]");
            }
            &empty
        });
        c.unknown_keys(axes, "axes.", &["alpha", "sigma2", "eta", "gamma", "depth", "widths"]);
        let axis = |c: &mut Checker, key: &str, required: bool| match axes.get(key) {
            Some(v) => Some(c.axis(v, &format!("axes.{key}"))),
            None => {
                if required {
                    c.err(format!("missing axis 'axes.{key}'"));
                }
                None
            }
        };
        let alpha = axis(&mut c, "alpha", true).unwrap_or_default();
        let sigma2 = axis(&mut c, "sigma2", true).unwrap_or_default();
        let eta = axis(&mut c, "eta", true).unwrap_or_default();
        let gamma = axis(&mut c, "gamma", false);
        let depth = axes.get("depth").map(|v| match v {
            Value::Array(items) => items
                .iter()
                .enumerate()
                .filter_map(|(i, x)| c.count(x, &format!("axes.depth[{i}]"), 1))
                .map(|d| d as usize)
                .collect(),
            other => c.count(other, "axes.depth", 1).map(|d| d as usize).into_iter().collect(),
        });
        let widths: Option<Vec<Vec<f64>>> = axes.get("widths").map(|v| match v {
            Value::Array(items) => items
                .iter()
                .enumerate()
                .map(|(i, w)| match w {
                    Value::Array(_) => c.axis(w, &format!("axes.widths[{i}]")),
                    _ => {
                        c.err(format!("'axes.widths[{i}]' must be a list of widths"));
                        Vec::new()
                    }
                })
                .collect(),
            _ => {
                c.err("'axes.widths' must be a list of width lists");
                Vec::new()
            }
        });

        for (key, values) in [("alpha", &alpha), ("sigma2", &sigma2), ("eta", &eta)] {
            if axes.contains_key(key) {
                c.non_empty(values, &format!("axes.{key}"));
            }
        }
        c.positive(&alpha, "axes.alpha", false);
        c.positive(&sigma2, "axes.sigma2", false);
        c.positive(&eta, "axes.eta", true);

        let arch = match (model, gamma, depth, widths) {
            (Some(ModelName::Lr), g, d, w) => {
                if g.is_some() || d.is_some() || w.is_some() {
                    c.err("model 'lr' takes no gamma, depth or widths axes");
                }
                ArchAxis::None
            }
            (_, Some(_), _, Some(_)) => {
                c.err("give either 'axes.gamma' (with 'axes.depth') or 'axes.widths', not both");
                ArchAxis::None
            }
            (_, None, Some(_), Some(_)) => {
                c.err("'axes.depth' goes with 'axes.gamma', not 'axes.widths'");
                ArchAxis::None
            }
            (_, Some(gamma), depth, None) => {
                c.non_empty(&gamma, "axes.gamma");
                c.positive(&gamma, "axes.gamma", false);
                let depth = depth.unwrap_or_else(|| vec![1]);
                c.non_empty(&depth, "axes.depth");
                ArchAxis::Broadcast { gamma, depth }
            }
            (_, None, None, Some(widths)) => {
                c.non_empty(&widths, "axes.widths");
                for (i, w) in widths.iter().enumerate() {
                    c.non_empty(w, &format!("axes.widths[{i}]"));
                    c.positive(w, &format!("axes.widths[{i}]"), false);
                }
                ArchAxis::PerLayer(widths)
            }
            (Some(_), None, _, None) => {
                c.err("models 'rf' and 'nn' need 'axes.gamma' or 'axes.widths'");
                ArchAxis::None
            }
            (None, ..) => ArchAxis::None,
        };

        let sim = c.subtable(&root, "sim").map(|t| {
            c.unknown_keys(t, "sim.", &["d", "n_reps", "base_seed"]);
            let d = t.get("d").map_or(Some(DEFAULT_D as u64), |v| c.count(v, "sim.d", 1));
            let n = t.get("n_reps").map_or(Some(DEFAULT_REPS as u64), |v| c.count(v, "sim.n_reps", 2));
            let seed = t.get("base_seed").map_or(Some(0), |v| c.count(v, "sim.base_seed", 0));
            (d, n, seed)
        });
        let sim = match sim {
            Some((Some(d), Some(n_reps), Some(base_seed))) => {
                Some(SimSettings { d: d as usize, n_reps: n_reps as usize, base_seed })
            }
            _ => None,
        };

        let (mut output, mut format) = (None, Format::Csv);
        if let Some(t) = c.subtable(&root, "output") {
            c.unknown_keys(t, "output.", &["path", "format"]);
            match t.get("path") {
                Some(Value::String(p)) if p != "-" => output = Some(PathBuf::from(p)),
                Some(Value::String(_)) | None => {}
                Some(v) => c.err(format!("'output.path' must be a string, got {v}")),
            }
            match t.get("format") {
                Some(Value::String(f)) => match f.parse() {
                    Ok(f) => format = f,
                    Err(e) => c.err(format!("'output.format': {e}")),
                },
                Some(v) => c.err(format!("'output.format' must be a string, got {v}")),
                None => {}
            }
        }

        match (c.errors.is_empty(), model) {
            (true, Some(model)) => Ok(SweepConfig { model, alpha, sigma2, eta, arch, sim, output, format }),
            _ => Err(ConfigError(c.errors)),
        }
    }

    /// Architectures in axis order (depth outer, width inner for the
    /// broadcast form).
    pub fn architectures(&self) -> Vec<Option<Architecture>> {
        let build = |w: Vec<f64>| Some(Architecture::new(w).expect("validated widths"));
        match &self.arch {
            ArchAxis::None => vec![None],
            ArchAxis::Broadcast { gamma, depth } => depth
                .iter()
                .flat_map(|&l| gamma.iter().map(move |&g| vec![g; l]))
                .map(build)
                .collect(),
            ArchAxis::PerLayer(widths) => widths.iter().cloned().map(build).collect(),
        }
    }

    /// Every grid point in row order: `sigma2`, `eta`, architecture,
    /// `alpha`, with `alpha` varying fastest.
    pub fn points(&self) -> Vec<GridPoint> {
        let archs = self.architectures();
        let mut out = Vec::new();
        for &s2 in &self.sigma2 {
            for &eta in &self.eta {
                for arch in &archs {
                    for &a in &self.alpha {
                        out.push(GridPoint {
                            model: self.model.with_architecture(arch.clone()),
                            scenario: Scenario::new(a, s2, eta).expect("validated scenario"),
                        });
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_example() {
        let cfg = SweepConfig::parse(
            r#"
            model = "rf"
            [axes]
            alpha = { from = 0.1, to = 0.5, points = 5 }
            sigma2 = 1
            eta = [0.0, 0.5]
            gamma = [0.5, 2]
            depth = [1, 2]
            [sim]
            d = 50
            n_reps = 4
            base_seed = 9
            [output]
            path = "x.csv"
            format = "jsonl"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.alpha.len(), 5);
        assert!((cfg.alpha[4] - 0.5).abs() < 1e-15);
        assert_eq!(cfg.sim, Some(SimSettings { d: 50, n_reps: 4, base_seed: 9 }));
        assert_eq!(cfg.format, Format::Jsonl);
        let pts = cfg.points();
        assert_eq!(pts.len(), 5 * 2 * 4);
        // alpha fastest, then architecture
        assert_eq!(pts[1].scenario.alpha(), cfg.alpha[1]);
        assert_eq!(pts[5].model.architecture().unwrap().widths(), &[2.0]);
        assert_eq!(pts[10].model.architecture().unwrap().widths(), &[0.5, 0.5]);
    }

    #[test]
    fn reports_every_problem() {
        let err = SweepConfig::parse(
            r#"
            model = "rf"
            colour = "red"
            [axes]
            alpha = [-1.0, 0.5]
            sigma2 = []
            eta = [0.0]
            [sim]
            n_reps = 1
            "#,
        )
        .unwrap_err();
        let text = err.to_string();
        for needle in ["colour", "axes.alpha", "axes.sigma2", "sim.n_reps", "axes.gamma"] {
            assert!(text.contains(needle), "{needle} missing from:\n{text}");
        }
        assert_eq!(err.0.len(), 5, "{text}");
    }

    #[test]
    fn log_ranges_hit_both_ends() {
        let v = linspace(0.6, 1e4, 7, true);
        assert_eq!((v[0], v[6]), (0.6, 1e4));
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn lr_rejects_architecture() {
        let err = SweepConfig::parse(
            "model = \"lr\"\n[axes]\nalpha = [0.5]\nsigma2 = [1]\neta = [0]\ngamma = [1]\n",
        )
        .unwrap_err();
        assert_eq!(err.0.len(), 1);
    }
}
