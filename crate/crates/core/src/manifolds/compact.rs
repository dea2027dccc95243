use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sampling::{log_uniform, stream_rng, unit_vector, Halton};

/// Extra constraint cutting the parameter box down to K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Constraint {
    None,
    /// `h[1] - h[0] >= gap` (interval endpoints).
    MinGap { gap: f64 },
    /// `|h[0..dims]| <= radius` (ball centres).
    CentreBall { dims: usize, radius: f64 },
}

/// A compact set K of chart coordinates: a closed box intersected with an
/// optional convex constraint, plus the single-chart threshold δ_{K,M}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactSetSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub constraint: Constraint,
    /// δ_{K,M} in the ambient norm; `f64::INFINITY` when any value works.
    pub delta: f64,
}

const MEMBERSHIP_TOL: f64 = 1e-12;

impl CompactSetSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, constraint: Constraint, delta: f64) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(invalid("compact set box needs matching nonempty bounds"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(invalid("empty or unbounded compact set box"));
        }
        if !(delta > 0.0) {
            return Err(invalid("δ_{K,M} must be positive"));
        }
        let spec = CompactSetSpec { lo, hi, constraint, delta };
        if !spec.contains(&spec.project(&spec.centre())) {
            return Err(invalid("constraint leaves the compact set empty"));
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn centre(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Euclidean diameter of the bounding box.
    pub fn box_diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, h: &[f64]) -> bool {
        if h.len() != self.dim() {
            return false;
        }
        let in_box = h.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, u))| {
            let tol = MEMBERSHIP_TOL * (1.0 + l.abs().max(u.abs()));
            *x >= l - tol && *x <= u + tol
        });
        in_box
            && match &self.constraint {
                Constraint::None => true,
                Constraint::MinGap { gap } => h[1] - h[0] >= gap - MEMBERSHIP_TOL,
                Constraint::CentreBall { dims, radius } => {
                    h[..*dims].iter().map(|x| x * x).sum::<f64>().sqrt() <= radius + MEMBERSHIP_TOL
                }
            }
    }

    /// Euclidean projection onto K.
    pub fn project(&self, h: &[f64]) -> Vec<f64> {
        let clamp = |h: &[f64]| -> Vec<f64> {
            h.iter().zip(self.lo.iter().zip(&self.hi)).map(|(x, (l, u))| x.clamp(*l, *u)).collect()
        };
        match &self.constraint {
            Constraint::None => clamp(h),
            Constraint::CentreBall { dims, radius } => {
                let mut out = clamp(h);
                let norm = h[..*dims].iter().map(|x| x * x).sum::<f64>().sqrt();
                let scale = if norm > *radius { radius / norm } else { 1.0 };
                for i in 0..*dims {
                    out[i] = h[i] * scale;
                }
                out
            }
            Constraint::MinGap { gap } => {
                if self.contains(h) {
                    return h.to_vec();
                }
                // K is the triangle with these vertices in the (a, b) plane.
                let (l0, u1) = (self.lo[0], self.hi[1]);
                let a_max = (self.hi[0]).min(u1 - gap);
                let b_min = (self.lo[1]).max(l0 + gap);
                let verts = [[l0, b_min], [l0, u1], [a_max, u1], [a_max, a_max + gap], [b_min - gap, b_min]];
                let p = [h[0], h[1]];
                let mut best = verts[0];
                let mut best_d = f64::INFINITY;
                for i in 0..verts.len() {
                    let q = closest_on_segment(p, verts[i], verts[(i + 1) % verts.len()]);
                    let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                    if d < best_d {
                        best_d = d;
                        best = q;
                    }
                }
                best.to_vec()
            }
        }
    }

    /// Uniform point of K by rejection from the box.
    pub fn random_point(&self, rng: &mut impl Rng) -> Result<Vec<f64>> {
        for _ in 0..100_000 {
            let h: Vec<f64> = self
                .lo
                .iter()
                .zip(&self.hi)
                .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
                .collect();
            if self.contains(&h) {
                return Ok(h);
            }
        }
        Err(Error::Degenerate("rejection sampling of K failed".into()))
    }
}

fn closest_on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return a;
    }
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    [a[0] + t * d[0], a[1] + t * d[1]]
}

/// Deterministic quasi-uniform sample of K: a Halton sequence over the box,
/// starting at the box centre, with points outside the constraint skipped.
pub fn sample_compact(spec: &CompactSetSpec, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let halton = Halton::new(spec.dim(), seed);
    let mut out = Vec::with_capacity(count);
    let mut index = 0u64;
    let budget = 1000 * count as u64 + 10_000;
    while out.len() < count {
        if index > budget {
            return Err(Error::Degenerate("compact set too thin to sample".into()));
        }
        let u = halton.point(index);
        index += 1;
        let h: Vec<f64> = u
            .iter()
            .zip(spec.lo.iter().zip(&spec.hi))
            .map(|(x, (l, hi))| l + (hi - l) * x)
            .collect();
        if spec.contains(&h) {
            out.push(h);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOptions {
    /// Fraction of pairs drawn at small chart distance.
    pub near_fraction: f64,
    pub near_min: f64,
    /// Upper end of the near-pair chart distance; 10⁻² by default.
    pub near_max: f64,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions { near_fraction: 0.5, near_min: 1e-5, near_max: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub near: bool,
}

/// Random pairs of K. Pair `i` uses its own random stream, so the list does
/// not depend on how it is later split across threads.
pub fn sample_pairs(
    spec: &CompactSetSpec,
    count: usize,
    seed: u64,
    opts: PairOptions,
) -> Result<Vec<PointPair>> {
    let near_count = (opts.near_fraction * count as f64).round() as usize;
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let x = spec.random_point(&mut rng)?;
            if i >= near_count {
                loop {
                    let y = spec.random_point(&mut rng)?;
                    if y != x {
                        return Ok(PointPair { x, y, near: false });
                    }
                }
            }
            for _ in 0..1000 {
                let d = log_uniform(&mut rng, opts.near_min, opts.near_max);
                let u = unit_vector(&mut rng, spec.dim());
                for sign in [1.0, -1.0] {
                    let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + sign * d * b).collect();
                    if spec.contains(&y) {
                        return Ok(PointPair { x, y, near: true });
                    }
                }
            }
            Err(Error::Degenerate("could not place a near pair inside K".into()))
        })
        .collect()
}
