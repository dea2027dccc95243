//! Deterministic random streams and low-discrepancy sequences.
//!
//! Every Monte Carlo computation in the crate draws from a ChaCha stream
//! keyed by `(seed, stream)`, so parallel shards are reproducible and the
//! merged result does not depend on how many threads ran them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Number of samples handled by one Monte Carlo shard.
pub const SHARD_SIZE: u64 = 1 << 16;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `samples` into fixed-size shards: `(shard index, shard length)`.
pub fn shards(samples: u64) -> impl Iterator<Item = (u64, u64)> + Clone {
    let full = samples / SHARD_SIZE;
    let rest = samples % SHARD_SIZE;
    (0..full)
        .map(|i| (i, SHARD_SIZE))
        .chain((rest > 0).then_some((full, rest)))
}

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Radical inverse of `index` in base `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut acc = 0.0;
    while index > 0 {
        acc += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    acc
}

/// Halton points in `[0,1)^dim` shifted so the first point is the centre of
/// the cube, with an optional Cranley–Patterson rotation drawn from `seed`.
/// Seed 0 means no rotation.
#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension above {}", PRIMES.len());
        let shift = if seed == 0 {
            vec![0.0; dim]
        } else {
            let mut rng = stream_rng(seed, u64::MAX);
            (0..dim).map(|_| rng.gen::<f64>()).collect()
        };
        Halton { dim, shift }
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        (0..self.dim)
            .map(|d| (radical_inverse(index, PRIMES[d]) + 0.5 + self.shift[d]).fract())
            .collect()
    }
}

pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform direction on the unit sphere in R^n.
pub fn unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Log-uniform draw in `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}
