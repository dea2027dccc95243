use serde::{Deserialize, Serialize};

use crate::geometry::SimplexParams;

/// The chart U_T around a simplex T: simplexes whose vertices can be matched
/// one-to-one with those of T, each within `R_T = min edge / 3`.
/// Coordinates list the matched vertices in the lexicographic order of T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexChart {
    pub centre: Vec<Vec<f64>>,
    pub radius: f64,
}

impl SimplexChart {
    pub fn new(t: &SimplexParams) -> Self {
        SimplexChart { centre: t.vertices().to_vec(), radius: t.min_edge() / 3.0 }
    }

    pub fn dim(&self) -> usize {
        self.centre.len() - 1
    }

    pub fn centre_coords(&self) -> Vec<f64> {
        self.centre.iter().flatten().copied().collect()
    }

    /// ‖v − v^T‖ in the max-over-vertices Euclidean norm.
    pub fn offset(&self, coords: &[f64]) -> f64 {
        coords
            .chunks(self.dim())
            .zip(&self.centre)
            .map(|(v, c)| super::euclid(v, c))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.centre.len() * self.dim() && self.offset(coords) < self.radius
    }

    /// Coordinates of `s` in this chart, if `s` lies in U_T.
    pub fn coords_of(&self, s: &SimplexParams) -> Option<Vec<f64>> {
        if s.dim() != self.dim() {
            return None;
        }
        let mut coords = Vec::with_capacity(self.centre.len() * self.dim());
        for c in &self.centre {
            let v = s.vertices().iter().find(|v| super::euclid(v, c) < self.radius)?;
            coords.extend_from_slice(v);
        }
        Some(coords)
    }

    /// Re-expresses coordinates from another chart in this one.
    pub fn transition(&self, coords: &[f64]) -> Option<Vec<f64>> {
        let s = SimplexParams::new(coords.chunks(self.dim()).map(|c| c.to_vec()).collect()).ok()?;
        self.coords_of(&s)
    }
}
