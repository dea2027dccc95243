//! Symmetric-difference volumes of balls and simplexes, exact and Monte Carlo,
//! plus the per-case bi-Lipschitz certifier for pairs of balls.

mod ball;
mod certify;
mod simplex;

pub use ball::{
    ball_symmdiff_exact, ball_symmdiff_montecarlo, ball_volume, cap_volume,
    cap_volume_elementary, intersection_volume, unit_ball_volume, BallParams,
};
pub use certify::{bilip_certify, BoundCase, BoundReport};
pub use simplex::{
    clip_convex, polygon_area, simplex_lipschitz_constant, simplex_symmdiff,
    simplex_symmdiff_montecarlo, triangle_intersection_area, SimplexParams,
    DEFAULT_SIMPLEX_MC_SAMPLES,
};

use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl McEstimate {
    pub(crate) fn from_hits(hits: u64, samples: u64, box_volume: f64) -> Self {
        let p = hits as f64 / samples as f64;
        McEstimate {
            estimate: box_volume * p,
            stderr: box_volume * (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
        }
    }

    /// Whether `value` lies within `k` standard errors of the estimate.
    /// A zero standard error only accepts an exact match up to rounding.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        let slack = 1e-12 * value.abs().max(self.estimate.abs()).max(1.0);
        (self.estimate - value).abs() <= k * self.stderr + slack
    }
}
