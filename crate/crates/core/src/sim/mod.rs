//! Monte Carlo estimates of the zero-temperature generalization error at
//! finite size, from exact fixed-data posterior expectations.
//!
//! For LR and RF models the end-to-end weight `w` has a Gaussian prior with
//! covariance `G`, and the zero-temperature posterior is that prior
//! conditioned on (or projected onto) the data. Per replicate the error
//! splits into the squared distance `bias` of the posterior mean from the
//! teacher and the posterior covariance trace `variance`. Which closed form
//! applies depends on the invertibility regime:
//!
//! * `p < min(d, n_min)`: the posterior is the prior conditioned on
//!   `X w = y`, with mean `G X^T (X G X^T)^-1 y` and covariance
//!   `G - G X^T (X G X^T)^-1 X G`;
//! * `n_min < d` and `p > n_min`: least squares within the range of the
//!   bottleneck, zero variance;
//! * otherwise (`p > d`): ordinary least squares, zero variance.
//!
//! The two-layer NN is handled by integrating out the hidden layer, which
//! leaves a variance term given by a ratio of Bessel functions.

pub mod bessel;
pub mod linalg;
pub mod rng;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelKind, Scenario};

pub use bessel::bessel_k_ratio;
use linalg::spd_factor;
use rng::{gaussian_matrix, gaussian_vector, sphere_vector, stream_rng, wishart_gram, Stream};

/// Input dimension used when none is given.
pub const DEFAULT_D: usize = 100;
/// Replicates per estimate used when none is given.
pub const DEFAULT_REPS: usize = 10;

/// Seeds of one estimate. The teacher normally shares the base seed; giving
/// it its own seed redraws `w*` while keeping inputs, noise and features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub base: u64,
    pub teacher: u64,
}

impl From<u64> for Seeds {
    fn from(base: u64) -> Self {
        Self { base, teacher: base }
    }
}

/// Data of one replicate.
#[derive(Clone, Debug)]
pub struct DisorderSample {
    /// `p x d` standard Gaussian inputs.
    pub x: DMatrix<f64>,
    /// Teacher with `|w*|^2 = d`.
    pub w_star: DVector<f64>,
    /// Standard Gaussian label noise.
    pub xi: DVector<f64>,
    /// `y = X w* / sqrt(d) + eta xi`.
    pub y: DVector<f64>,
}

impl DisorderSample {
    pub fn draw(d: usize, p: usize, eta: f64, seeds: Seeds, rep: u64) -> Self {
        let x = gaussian_matrix(&mut stream_rng(seeds.base, rep, Stream::Inputs), p, d);
        let w_star = sphere_vector(&mut stream_rng(seeds.teacher, rep, Stream::Teacher), d);
        let xi = gaussian_vector(&mut stream_rng(seeds.base, rep, Stream::Noise), p);
        let y = &x * &w_star / (d as f64).sqrt() + &xi * eta;
        Self { x, w_star, xi, y }
    }

    fn target(&self) -> DVector<f64> {
        &self.w_star / (self.x.ncols() as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub bias: f64,
    pub variance: f64,
}

impl Replicate {
    pub fn total(&self) -> f64 {
        self.bias + self.variance
    }
}

/// Mean and standard error over replicates, with the sizes they were
/// drawn at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub se: f64,
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub widths: Vec<usize>,
    pub seed: u64,
    /// Per-replicate values, in replicate order.
    pub replicates: Vec<Replicate>,
}

/// Mean and standard error of `values`, which must have at least two entries.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl SimEstimate {
    fn from_replicates(
        replicates: Vec<Replicate>,
        d: usize,
        p: usize,
        widths: Vec<usize>,
        seed: u64,
    ) -> Self {
        let totals: Vec<f64> = replicates.iter().map(Replicate::total).collect();
        let (mean, se) = mean_se(&totals);
        Self { mean, se, n: replicates.len(), d, p, widths, seed, replicates }
    }
}

/// Invertibility regime of an LR or RF posterior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p > d`, no bottleneck below `d`: least squares.
    OverDetermined,
    /// `p < min(d, n_min)`: conditioned Gaussian prior.
    Conditioned,
    /// `n_min < d`, `p > n_min`: least squares inside the bottleneck.
    Bottleneck,
}

pub fn regime(d: usize, p: usize, widths: &[usize]) -> Result<Regime> {
    let n_min = widths.iter().copied().min().unwrap_or(usize::MAX);
    let rank = d.min(n_min);
    if p == rank {
        return Err(Error::RegimeAmbiguous(format!(
            "p = {p} equals the prior rank min(d, n_min) = {rank}"
        )));
    }
    Ok(if p < rank {
        Regime::Conditioned
    } else if n_min < d {
        Regime::Bottleneck
    } else {
        Regime::OverDetermined
    })
}

fn check_sizes(d: usize, p: usize, widths: &[usize], n_reps: usize) -> Result<()> {
    if d == 0 || p == 0 || widths.contains(&0) {
        return Err(Error::invalid("sizes d, p and every n_l must be at least one"));
    }
    if n_reps < 2 {
        return Err(Error::invalid(format!("need at least two replicates, got {n_reps}")));
    }
    Ok(())
}

fn run_replicates(
    n_reps: usize,
    f: impl Fn(u64) -> Result<Replicate> + Sync + Send,
) -> Result<Vec<Replicate>> {
    (0..n_reps as u64).into_par_iter().map(f).collect()
}

/// Feature products for an RF model: the prior covariance `G` (`d x d`)
/// and the transpose of the map up to the first narrowest layer
/// (`d x n_min`), a basis of the range of `G`.
struct Features {
    gram: DMatrix<f64>,
    bottleneck: DMatrix<f64>,
}

fn draw_features(d: usize, widths: &[usize], sigma2: f64, seeds: Seeds, rep: u64) -> Features {
    let depth = widths.len();
    let n_min = *widths.iter().min().expect("at least one layer");
    let l_min = widths.iter().position(|n| *n == n_min).expect("minimum exists");

    // explicit product U_{l} ... U_1 for all but the last layer
    let mut m = DMatrix::identity(d, d);
    let mut bottleneck = None;
    for (l, &n) in widths[..depth - 1].iter().enumerate() {
        let u = gaussian_matrix(&mut stream_rng(seeds.base, rep, Stream::Features(l + 1)), n, m.nrows());
        m = u * m;
        if l == l_min {
            bottleneck = Some(m.transpose());
        }
    }

    let last = widths[depth - 1];
    let mut rng = stream_rng(seeds.base, rep, Stream::Features(depth));
    let inner = if last >= m.nrows() {
        wishart_gram(&mut rng, last, m.nrows())
    } else {
        let u = gaussian_matrix(&mut rng, last, m.nrows());
        let top = &u * &m;
        if l_min == depth - 1 {
            bottleneck = Some(top.transpose());
        }
        u.transpose() * u
    };
    let scale = sigma2 / (d as f64 * widths.iter().map(|n| *n as f64).product::<f64>());
    let gram = (m.transpose() * inner * &m) * scale;
    // unset only when no layer is narrower than its input, in which case no
    // bottleneck regime can arise
    let bottleneck = bottleneck.unwrap_or_else(|| m.transpose());
    Features { gram, bottleneck }
}

fn conditioned(sample: &DisorderSample, gram: &DMatrix<f64>) -> Result<Replicate> {
    let b = &sample.x * gram;
    let k = &b * sample.x.transpose();
    let chol = spd_factor(k)?;
    let c = chol.solve(&sample.y);
    let mean = b.transpose() * c;
    let kb = chol.solve(&b);
    let explained: f64 = b.component_mul(&kb).sum();
    Ok(Replicate {
        bias: (mean - sample.target()).norm_squared(),
        variance: gram.trace() - explained,
    })
}

fn least_squares(sample: &DisorderSample, basis: Option<&DMatrix<f64>>) -> Result<Replicate> {
    let xa = match basis {
        Some(a) => &sample.x * a,
        None => sample.x.clone(),
    };
    let chol = spd_factor(xa.transpose() * &xa)?;
    let c = chol.solve(&(xa.transpose() * &sample.y));
    let mean = match basis {
        Some(a) => a * c,
        None => c,
    };
    Ok(Replicate { bias: (mean - sample.target()).norm_squared(), variance: 0.0 })
}

fn lr_replicate(sample: &DisorderSample, sigma2: f64) -> Result<Replicate> {
    let (p, d) = sample.x.shape();
    if p < d {
        conditioned(sample, &(DMatrix::identity(d, d) * (sigma2 / d as f64)))
    } else {
        least_squares(sample, None)
    }
}

/// One RF replicate on the given disorder.
pub fn rf_replicate(
    sample: &DisorderSample,
    widths: &[usize],
    sigma2: f64,
    seeds: Seeds,
    rep: u64,
) -> Result<Replicate> {
    let (p, d) = sample.x.shape();
    let reg = regime(d, p, widths)?;
    if reg == Regime::OverDetermined {
        return least_squares(sample, None);
    }
    let f = draw_features(d, widths, sigma2, seeds, rep);
    match reg {
        Regime::Conditioned => conditioned(sample, &f.gram),
        _ => least_squares(sample, Some(&f.bottleneck)),
    }
}

/// Error of an RF model with hidden widths `widths` (in units, not ratios).
pub fn simulate_rf_error(
    widths: &[usize],
    d: usize,
    p: usize,
    s: &Scenario,
    n_reps: usize,
    seed: impl Into<Seeds>,
) -> Result<SimEstimate> {
    let seeds = seed.into();
    check_sizes(d, p, widths, n_reps)?;
    if widths.is_empty() {
        return Err(Error::invalid("RF model needs at least one hidden layer"));
    }
    regime(d, p, widths)?;
    let reps = run_replicates(n_reps, |rep| {
        let sample = DisorderSample::draw(d, p, s.eta(), seeds, rep);
        rf_replicate(&sample, widths, s.sigma2(), seeds, rep)
    })?;
    Ok(SimEstimate::from_replicates(reps, d, p, widths.to_vec(), seeds.base))
}

/// Error of Bayesian linear regression (prior covariance `sigma2 / d`).
pub fn simulate_lr_error(
    d: usize,
    p: usize,
    s: &Scenario,
    n_reps: usize,
    seed: impl Into<Seeds>,
) -> Result<SimEstimate> {
    let seeds = seed.into();
    check_sizes(d, p, &[], n_reps)?;
    regime(d, p, &[])?;
    let reps = run_replicates(n_reps, |rep| {
        lr_replicate(&DisorderSample::draw(d, p, s.eta(), seeds, rep), s.sigma2())
    })?;
    Ok(SimEstimate::from_replicates(reps, d, p, Vec::new(), seeds.base))
}

/// One two-layer NN replicate on the given disorder (`p < d`).
pub fn nn_replicate(sample: &DisorderSample, n1: usize, sigma2: f64) -> Result<Replicate> {
    let (p, d) = sample.x.shape();
    let chol = spd_factor(&sample.x * sample.x.transpose())?;
    let c = chol.solve(&sample.y);
    let bias = (sample.x.transpose() * &c - sample.target()).norm_squared();
    let q = (n1 as f64 * d as f64 / sigma2 * sample.y.dot(&c)).sqrt();
    let nu = (n1 as f64 - p as f64) / 2.0;
    let ratio = bessel_k_ratio(nu, q)?;
    let variance = (1.0 - p as f64 / d as f64) * (sigma2 / n1 as f64) * q * ratio;
    Ok(Replicate { bias, variance })
}

/// Error of a deep linear network with one hidden layer of `n1` units, in
/// the under-sampled regime `p < d`.
pub fn simulate_nn_error_two_layer(
    n1: usize,
    d: usize,
    p: usize,
    s: &Scenario,
    n_reps: usize,
    seed: impl Into<Seeds>,
) -> Result<SimEstimate> {
    let seeds = seed.into();
    check_sizes(d, p, &[n1], n_reps)?;
    if p >= d {
        return Err(Error::domain(format!(
            "NN estimator covers p < d only, got p = {p}, d = {d}"
        )));
    }
    let reps = run_replicates(n_reps, |rep| {
        nn_replicate(&DisorderSample::draw(d, p, s.eta(), seeds, rep), n1, s.sigma2())
    })?;
    Ok(SimEstimate::from_replicates(reps, d, p, vec![n1], seeds.base))
}

/// RF error minus NN error for one hidden layer of `n1` units, both models
/// evaluated on the same inputs, teacher and noise in every replicate.
pub fn simulate_gap_two_layer(
    n1: usize,
    d: usize,
    p: usize,
    s: &Scenario,
    n_reps: usize,
    seed: impl Into<Seeds>,
) -> Result<SimEstimate> {
    let seeds = seed.into();
    check_sizes(d, p, &[n1], n_reps)?;
    if p >= d {
        return Err(Error::domain(format!(
            "NN estimator covers p < d only, got p = {p}, d = {d}"
        )));
    }
    regime(d, p, &[n1])?;
    let reps = run_replicates(n_reps, |rep| {
        let sample = DisorderSample::draw(d, p, s.eta(), seeds, rep);
        let rf = rf_replicate(&sample, &[n1], s.sigma2(), seeds, rep)?;
        let nn = nn_replicate(&sample, n1, s.sigma2())?;
        Ok(Replicate { bias: rf.bias - nn.bias, variance: rf.variance - nn.variance })
    })?;
    Ok(SimEstimate::from_replicates(reps, d, p, vec![n1], seeds.base))
}

/// `tr[(X X^T)^-1]` over replicates of the input matrix, `p < d - 1`.
pub fn inverse_wishart_trace(d: usize, p: usize, n_reps: usize, seed: u64) -> Result<SimEstimate> {
    check_sizes(d, p, &[], n_reps)?;
    if p + 1 >= d {
        return Err(Error::domain(format!("need p < d - 1, got p = {p}, d = {d}")));
    }
    let reps = run_replicates(n_reps, |rep| {
        let x = gaussian_matrix(&mut stream_rng(seed, rep, Stream::Inputs), p, d);
        let chol = spd_factor(&x * x.transpose())?;
        Ok(Replicate { bias: chol.inverse().trace(), variance: 0.0 })
    })?;
    Ok(SimEstimate::from_replicates(reps, d, p, Vec::new(), seed))
}

/// Simulated error of any model at input dimension `d`, with `p = round(alpha d)`
/// and hidden widths `round(gamma_l d)`. Deep networks with more than one
/// hidden layer have no estimator and give `None`. Above the interpolation
/// threshold the network error is the LR error, which is simulated instead.
pub fn simulate_model(
    m: &ModelKind,
    s: &Scenario,
    d: usize,
    n_reps: usize,
    seed: impl Into<Seeds>,
) -> Result<Option<SimEstimate>> {
    let seeds = seed.into();
    let p = realized_width(s.alpha(), d);
    let widths: Vec<usize> = m
        .architecture()
        .map(|a| a.widths().iter().map(|g| realized_width(*g, d)).collect())
        .unwrap_or_default();
    match m {
        ModelKind::Lr => simulate_lr_error(d, p, s, n_reps, seeds).map(Some),
        ModelKind::Rf(_) => simulate_rf_error(&widths, d, p, s, n_reps, seeds).map(Some),
        ModelKind::Nn(_) if widths.len() > 1 => Ok(None),
        ModelKind::Nn(_) if p < d => {
            simulate_nn_error_two_layer(widths[0], d, p, s, n_reps, seeds).map(Some)
        }
        ModelKind::Nn(_) => simulate_lr_error(d, p, s, n_reps, seeds).map(Some),
    }
}

/// Simulated widths for ratio `gamma` at input dimension `d`: `round(gamma d)`.
pub fn realized_width(gamma: f64, d: usize) -> usize {
    ((gamma * d as f64).round() as usize).max(1)
}
