use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::McEstimate;
use crate::error::{invalid, Error, Result};
use crate::sampling::{shards, stream_rng};

/// Sample count used when a simplex distance in n >= 3 has no closed form.
pub const DEFAULT_SIMPLEX_MC_SAMPLES: u64 = 1 << 20;

/// A non-degenerate n-simplex in R^n, vertices stored in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexParams {
    vertices: Vec<Vec<f64>>,
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn edge_matrix(v: &[Vec<f64>]) -> DMatrix<f64> {
    let n = v.len() - 1;
    DMatrix::from_fn(n, n, |i, j| v[j + 1][i] - v[0][i])
}

impl SimplexParams {
    pub fn new(mut vertices: Vec<Vec<f64>>) -> Result<Self> {
        let n = vertices.len().saturating_sub(1);
        if n == 0 || vertices.iter().any(|v| v.len() != n) {
            return Err(invalid("an n-simplex needs n+1 vertices in R^n, n >= 1"));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("simplex vertices must be finite"));
        }
        let scale = max_edge(&vertices);
        let det = edge_matrix(&vertices).determinant();
        if !(det.abs() > 1e-12 * scale.powi(n as i32)) {
            return Err(Error::Degenerate("simplex has zero volume".into()));
        }
        vertices.sort_by(|a, b| lex_cmp(a, b));
        Ok(SimplexParams { vertices })
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn volume(&self) -> f64 {
        let n = self.dim();
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        edge_matrix(&self.vertices).determinant().abs() / fact
    }

    pub fn min_edge(&self) -> f64 {
        pair_distances(&self.vertices).fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge(&self) -> f64 {
        max_edge(&self.vertices)
    }

    /// Point-membership test through barycentric coordinates.
    pub fn membership(&self) -> Membership {
        let inv = edge_matrix(&self.vertices)
            .try_inverse()
            .expect("non-degenerate simplex");
        Membership {
            origin: DVector::from_column_slice(&self.vertices[0]),
            inv,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.membership().contains(x)
    }
}

fn pair_distances(v: &[Vec<f64>]) -> impl Iterator<Item = f64> + '_ {
    (0..v.len()).flat_map(move |i| {
        (i + 1..v.len()).map(move |j| {
            v[i].iter()
                .zip(&v[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
    })
}

fn max_edge(v: &[Vec<f64>]) -> f64 {
    pair_distances(v).fold(0.0, f64::max)
}

pub struct Membership {
    origin: DVector<f64>,
    inv: DMatrix<f64>,
}

impl Membership {
    pub fn contains(&self, x: &[f64]) -> bool {
        let rel = DVector::from_column_slice(x) - &self.origin;
        let lambda = &self.inv * rel;
        let tol = 1e-14;
        lambda.iter().all(|&l| l >= -tol) && lambda.sum() <= 1.0 + tol
    }
}

/// The Lipschitz constant 3^n (n+1) μ^(n-1) of the simplex parametrisation.
pub fn simplex_lipschitz_constant(n: usize, mu: f64) -> f64 {
    3f64.powi(n as i32) * (n as f64 + 1.0) * mu.powi(n as i32 - 1)
}

/// Signed shoelace area; positive for counter-clockwise polygons.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let k = poly.len();
    if k < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..k {
        let p = poly[i];
        let q = poly[(i + 1) % k];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * acc
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Sutherland–Hodgman clipping of `subject` by the convex, counter-clockwise
/// polygon `clip`.
pub fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        let mut prev = *input.last().unwrap();
        let mut prev_in = cross(a, b, prev) >= 0.0;
        for &cur in &input {
            let cur_in = cross(a, b, cur) >= 0.0;
            if cur_in != prev_in {
                let dp = cross(a, b, prev);
                let dc = cross(a, b, cur);
                let t = dp / (dp - dc);
                output.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
            }
            if cur_in {
                output.push(cur);
            }
            prev = cur;
            prev_in = cur_in;
        }
    }
    output
}

fn ccw_triangle(s: &SimplexParams) -> [[f64; 2]; 3] {
    let v = s.vertices();
    let mut t = [[v[0][0], v[0][1]], [v[1][0], v[1][1]], [v[2][0], v[2][1]]];
    if polygon_area(&t) < 0.0 {
        t.swap(1, 2);
    }
    t
}

pub fn triangle_intersection_area(s1: &SimplexParams, s2: &SimplexParams) -> Result<f64> {
    if s1.dim() != 2 || s2.dim() != 2 {
        return Err(invalid("clipping is implemented for triangles only"));
    }
    let t1 = ccw_triangle(s1);
    let t2 = ccw_triangle(s2);
    Ok(polygon_area(&clip_convex(&t1, &t2)).max(0.0))
}

/// |T1 △ T2|: exact by clipping for n = 2, Monte Carlo otherwise.
pub fn simplex_symmdiff(s1: &SimplexParams, s2: &SimplexParams) -> Result<f64> {
    if s1.dim() != s2.dim() {
        return Err(Error::DomainMismatch("simplexes of different dimension".into()));
    }
    if s1 == s2 {
        return Ok(0.0);
    }
    if s1.dim() == 2 {
        let inter = triangle_intersection_area(s1, s2)?;
        return Ok(((s1.volume() - inter) + (s2.volume() - inter)).max(0.0));
    }
    if s1.dim() == 1 {
        let (a1, b1) = (s1.vertices[0][0], s1.vertices[1][0]);
        let (a2, b2) = (s2.vertices[0][0], s2.vertices[1][0]);
        let inter = (b1.min(b2) - a1.max(a2)).max(0.0);
        return Ok((b1 - a1) + (b2 - a2) - 2.0 * inter);
    }
    Ok(simplex_symmdiff_montecarlo(s1, s2, DEFAULT_SIMPLEX_MC_SAMPLES, 0)?.estimate)
}

pub fn simplex_symmdiff_montecarlo(
    s1: &SimplexParams,
    s2: &SimplexParams,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if s1.dim() != s2.dim() {
        return Err(Error::DomainMismatch("simplexes of different dimension".into()));
    }
    if samples == 0 {
        return Err(invalid("Monte Carlo needs at least one sample"));
    }
    let n = s1.dim();
    let all = s1.vertices().iter().chain(s2.vertices());
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for v in all {
        for i in 0..n {
            lo[i] = lo[i].min(v[i]);
            hi[i] = hi[i].max(v[i]);
        }
    }
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    if !(box_volume > 0.0) {
        return Err(Error::Degenerate("zero-volume sampling box".into()));
    }
    let (m1, m2) = (s1.membership(), s2.membership());
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
                if m1.contains(&x) != m2.contains(&x) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    Ok(McEstimate::from_hits(hits, samples, box_volume))
}
