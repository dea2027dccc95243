use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, gamma::gamma};

use super::McEstimate;
use crate::error::{invalid, Error, Result};
use crate::sampling::{shards, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    pub centre: Vec<f64>,
    pub radius: f64,
}

impl BallParams {
    pub fn new(centre: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("ball radius must be positive, got {radius}")));
        }
        if centre.is_empty() || centre.iter().any(|c| !c.is_finite()) {
            return Err(invalid("ball centre must be a finite point of R^n, n >= 1"));
        }
        Ok(BallParams { centre, radius })
    }

    pub fn dim(&self) -> usize {
        self.centre.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist2(&self.centre, x) <= self.radius * self.radius
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lebesgue measure of the unit ball in R^n; 1 for n = 0.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => {
            let half = n as f64 / 2.0;
            std::f64::consts::PI.powf(half) / gamma(half + 1.0)
        }
    }
}

pub fn ball_volume(n: usize, r: f64) -> f64 {
    unit_ball_volume(n) * r.powi(n as i32)
}

/// Volume of the cap of height `h` cut from a ball of radius `r` in R^n.
pub fn cap_volume(n: usize, r: f64, h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h >= 2.0 * r {
        return ball_volume(n, r);
    }
    if h > r {
        return ball_volume(n, r) - cap_volume(n, r, 2.0 * r - h);
    }
    let x = ((2.0 * r * h - h * h) / (r * r)).clamp(0.0, 1.0);
    0.5 * ball_volume(n, r) * beta_reg((n as f64 + 1.0) / 2.0, 0.5, x)
}

/// Textbook cap formulas for n <= 3, kept as an independent check on
/// [`cap_volume`].
pub fn cap_volume_elementary(n: usize, r: f64, h: f64) -> Option<f64> {
    let h = h.clamp(0.0, 2.0 * r);
    match n {
        1 => Some(h),
        2 => {
            let d = r - h;
            Some(r * r * (d / r).clamp(-1.0, 1.0).acos() - d * (2.0 * r * h - h * h).max(0.0).sqrt())
        }
        3 => Some(std::f64::consts::PI * h * h * (3.0 * r - h) / 3.0),
        _ => None,
    }
}

fn check_pair(b1: &BallParams, b2: &BallParams) -> Result<usize> {
    BallParams::new(b1.centre.clone(), b1.radius)?;
    BallParams::new(b2.centre.clone(), b2.radius)?;
    if b1.dim() != b2.dim() {
        return Err(Error::DomainMismatch(format!(
            "balls live in R^{} and R^{}",
            b1.dim(),
            b2.dim()
        )));
    }
    Ok(b1.dim())
}

/// |B1 ∩ B2|. Tangent balls count as disjoint.
pub fn intersection_volume(b1: &BallParams, b2: &BallParams) -> Result<f64> {
    let n = check_pair(b1, b2)?;
    let (r1, r2) = (b1.radius, b2.radius);
    let d = dist2(&b1.centre, &b2.centre).sqrt();
    if d >= r1 + r2 {
        return Ok(0.0);
    }
    if d <= (r1 - r2).abs() {
        return Ok(ball_volume(n, r1.min(r2)));
    }
    // Distance from a1 to the radical hyperplane, then the two cap heights.
    let x1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h1 = r1 - x1;
    let h2 = r2 - (d - x1);
    Ok(cap_volume(n, r1, h1) + cap_volume(n, r2, h2))
}

/// |B1 △ B2| in closed form.
pub fn ball_symmdiff_exact(b1: &BallParams, b2: &BallParams) -> Result<f64> {
    let n = check_pair(b1, b2)?;
    if b1 == b2 {
        return Ok(0.0);
    }
    let v1 = ball_volume(n, b1.radius);
    let v2 = ball_volume(n, b2.radius);
    let inter = intersection_volume(b1, b2)?;
    Ok(((v1 - inter) + (v2 - inter)).max(0.0))
}

/// Monte Carlo estimate of |B1 △ B2| by uniform sampling of the bounding
/// box of B1 ∪ B2. Deterministic in `seed` and independent of thread count.
pub fn ball_symmdiff_montecarlo(
    b1: &BallParams,
    b2: &BallParams,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let n = check_pair(b1, b2)?;
    if samples == 0 {
        return Err(invalid("Monte Carlo needs at least one sample"));
    }
    let lo: Vec<f64> = (0..n)
        .map(|i| (b1.centre[i] - b1.radius).min(b2.centre[i] - b2.radius))
        .collect();
    let hi: Vec<f64> = (0..n)
        .map(|i| (b1.centre[i] + b1.radius).max(b2.centre[i] + b2.radius))
        .collect();
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    if !(box_volume > 0.0) {
        return Err(Error::Degenerate("zero-volume sampling box".into()));
    }
    let jobs: Vec<(u64, u64)> = shards(samples).collect();
    let hits: u64 = jobs
        .par_iter()
        .map(|&(shard, len)| {
            let mut rng = stream_rng(seed, shard);
            let mut x = vec![0.0; n];
            let mut hits = 0u64;
            for _ in 0..len {
                for i in 0..n {
                    x[i] = lo[i] + (hi[i] - lo[i]) * rng.gen::<f64>();
                }
                if b1.contains(&x) != b2.contains(&x) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    Ok(McEstimate::from_hits(hits, samples, box_volume))
}
