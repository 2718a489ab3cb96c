//! Seeded random streams. Every replicate of every experiment gets its own
//! ChaCha20 key, derived from the base seed and replicate index, and each
//! random object within a replicate draws from its own stream of that key.
//! Draws therefore do not depend on execution order or on which other
//! objects are sampled.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Inputs,
    Teacher,
    Noise,
    /// Feature matrix of hidden layer `l` (one-based).
    Features(usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Inputs => 1,
            Stream::Teacher => 2,
            Stream::Noise => 3,
            Stream::Features(l) => 16 + l as u64,
        }
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, rep: u64, stream: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(splitmix64(seed ^ splitmix64(rep)));
    rng.set_stream(stream.id());
    rng
}

pub fn gaussian_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector(rng: &mut ChaCha20Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Uniform point on the sphere of radius `sqrt(d)`.
pub fn sphere_vector(rng: &mut ChaCha20Rng, d: usize) -> DVector<f64> {
    let g = gaussian_vector(rng, d);
    let norm = g.norm();
    g * ((d as f64).sqrt() / norm)
}

/// `U^T U` for a `rows x cols` standard Gaussian `U` with `rows >= cols`,
/// sampled through the Bartlett decomposition in `O(cols^2)` draws.
pub fn wishart_gram(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    assert!(rows >= cols, "Bartlett sampling needs rows >= cols");
    let mut l = DMatrix::zeros(cols, cols);
    for i in 0..cols {
        let chi = ChiSquared::new((rows - i) as f64).expect("positive degrees of freedom");
        l[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            l[(i, j)] = StandardNormal.sample(rng);
        }
    }
    &l * l.transpose()
}
