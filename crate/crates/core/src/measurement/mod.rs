//! Finite-rank Fejér measurements `Q_N u = F_N * u` in a real Parseval
//! packing, measured Jacobians and the projection deficit.
//!
//! On `[0, 1]` a measurement of bandwidth N has `2N + 1` entries
//! `(c_0, √2 Re c_1, √2 Im c_1, …, √2 Re c_N, √2 Im c_N)` with
//! `c_k = w_k ĉ_k` and `w_k = 1 − |k|/(N + 1)`, so that the Euclidean inner
//! product of two packed vectors is the L² product of the trigonometric
//! polynomials they represent. Triangles in `[0, 1]²` are measured on the
//! torus with the tensor-product kernel, giving `(2N + 1)²` entries: `c_0`
//! first, then `√2 Re`, `√2 Im` over the half-lattice `k_1 > 0` or
//! `k_1 = 0, k_2 > 0` in lexicographic order.
//!
//! Measurements already lie in the range of Q_N, so the adjoint `Q*` used by
//! Landweber acts as the identity on packed vectors.

mod torus;

use std::f64::consts::{SQRT_2, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::{apply_forward, chart_differential, ForwardOp};
use crate::funcspace::{fourier_coefficients, Domain, FunctionRep};
use crate::geometry::SimplexParams;
use crate::manifolds::{FamilyTag, ManifoldFamily};
use crate::quadrature::integrate_abs_pow;
use crate::sampling::{standard_normal, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub bandwidth: usize,
    /// 1 for `[0, 1]`, 2 for the torus `[0, 1]²`.
    pub dim: usize,
    pub coeffs: Vec<f64>,
}

pub fn fejer_weight(k: i64, n: usize) -> f64 {
    1.0 - k.unsigned_abs() as f64 / (n as f64 + 1.0)
}

/// Proven bound on `‖Q_N‖_{L(L¹, L¹)}`: the Fejér kernel is a nonnegative
/// function of unit mass.
pub fn qn_operator_norm_bound() -> f64 {
    1.0
}

pub fn packed_len(n: usize, dim: usize) -> usize {
    (2 * n + 1).pow(dim as u32)
}

/// Frequencies of the torus half-lattice in packing order.
fn half_lattice(n: usize) -> impl Iterator<Item = [i64; 2]> {
    let n = n as i64;
    (0..=n).flat_map(move |k1| {
        let start = if k1 == 0 { 1 } else { -n };
        (start..=n).map(move |k2| [k1, k2])
    })
}

fn pack_1d(n: usize, c: impl Fn(usize) -> Complex64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * n + 1);
    out.push(c(0).re);
    for k in 1..=n {
        let v = c(k) * fejer_weight(k as i64, n);
        out.push(SQRT_2 * v.re);
        out.push(SQRT_2 * v.im);
    }
    out
}

fn pack_2d(n: usize, c: impl Fn([i64; 2]) -> Complex64) -> Vec<f64> {
    let mut out = Vec::with_capacity(packed_len(n, 2));
    out.push(c([0, 0]).re);
    for k in half_lattice(n) {
        let v = c(k) * fejer_weight(k[0], n) * fejer_weight(k[1], n);
        out.push(SQRT_2 * v.re);
        out.push(SQRT_2 * v.im);
    }
    out
}

impl Measurement {
    pub fn zeros(bandwidth: usize, dim: usize) -> Self {
        Measurement { bandwidth, dim, coeffs: vec![0.0; packed_len(bandwidth, dim)] }
    }

    fn check_same(&self, other: &Measurement) -> Result<()> {
        if self.bandwidth != other.bandwidth || self.dim != other.dim || self.coeffs.len() != other.coeffs.len() {
            return Err(invalid(format!(
                "measurements differ in shape: N = {} (dim {}) vs N = {} (dim {})",
                self.bandwidth, self.dim, other.bandwidth, other.dim
            )));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Measurement) -> Result<Measurement> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Measurement { bandwidth: self.bandwidth, dim: self.dim, coeffs })
    }

    pub fn distance(&self, other: &Measurement) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }

    /// Complex coefficient `w_k ĉ_k` for `0 <= k <= N` (one-dimensional only).
    pub fn weighted_coefficient(&self, k: usize) -> Complex64 {
        assert_eq!(self.dim, 1, "one-dimensional measurement expected");
        if k == 0 {
            return Complex64::new(self.coeffs[0], 0.0);
        }
        Complex64::new(self.coeffs[2 * k - 1], self.coeffs[2 * k]) / SQRT_2
    }

    /// `(F_N * u)(t)` on `[0, 1]`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let step = Complex64::new(0.0, TAU * t).exp();
        let mut z = Complex64::new(1.0, 0.0);
        let mut acc = self.coeffs[0];
        for k in 1..=self.bandwidth {
            z *= step;
            if k % 16 == 0 {
                // Re-anchor the rotation to keep round-off from accumulating.
                z = Complex64::new(0.0, TAU * (k as f64 * t).fract()).exp();
            }
            acc += 2.0 * (self.weighted_coefficient(k) * z).re;
        }
        acc
    }

    /// Adds independent `N(0, σ²)` noise to every packed entry.
    pub fn with_noise(&self, sigma: f64, seed: u64) -> Result<Measurement> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid("noise level must be finite and nonnegative"));
        }
        let mut rng = stream_rng(seed, 0x6e6f_6973_65);
        let coeffs = self.coeffs.iter().map(|c| c + sigma * standard_normal(&mut rng)).collect();
        Ok(Measurement { bandwidth: self.bandwidth, dim: self.dim, coeffs })
    }

    /// `N, dim, c_0, …` with 17 significant digits.
    pub fn to_csv_row(&self) -> String {
        let mut s = format!("{},{}", self.bandwidth, self.dim);
        for c in &self.coeffs {
            s.push(',');
            s.push_str(&format_f64(*c));
        }
        s
    }

    pub fn from_csv_row(row: &str) -> Result<Measurement> {
        let mut it = row.trim().split(',');
        let parse_usize = |s: Option<&str>, what: &str| -> Result<usize> {
            s.ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
        };
        let bandwidth = parse_usize(it.next(), "bandwidth")?;
        let dim = parse_usize(it.next(), "dimension")?;
        if !(1..=2).contains(&dim) {
            return Err(Error::Parse(format!("unsupported measurement dimension {dim}")));
        }
        let coeffs = it
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad coefficient {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if coeffs.len() != packed_len(bandwidth, dim) {
            return Err(Error::Parse(format!(
                "expected {} coefficients, found {}",
                packed_len(bandwidth, dim),
                coeffs.len()
            )));
        }
        Ok(Measurement { bandwidth, dim, coeffs })
    }
}

/// Shortest-exact scientific notation with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Euclidean (Parseval) inner product of two measurements.
pub fn measurement_inner(m1: &Measurement, m2: &Measurement) -> Result<f64> {
    m1.check_same(m2)?;
    Ok(m1.coeffs.iter().zip(&m2.coeffs).map(|(a, b)| a * b).sum())
}

fn as_triangle(s: &SimplexParams) -> Result<[[f64; 2]; 3]> {
    if s.dim() != 2 {
        return Err(Error::Unsupported("torus measurements are two-dimensional".into()));
    }
    let v = s.vertices();
    if v.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::OutsideDomain("triangle must lie in the unit square".into()));
    }
    Ok([[v[0][0], v[0][1]], [v[1][0], v[1][1]], [v[2][0], v[2][1]]])
}

/// Collects `u = Σ c_j χ_{T_j}` for measurement on the torus.
fn triangle_terms(f: &FunctionRep, scale: f64, out: &mut Vec<(f64, [[f64; 2]; 3])>) -> Result<()> {
    match f {
        FunctionRep::SimplexIndicator { simplex, intensity } => {
            out.push((scale * intensity, as_triangle(simplex)?));
            Ok(())
        }
        FunctionRep::Combination { terms, .. } => {
            for (c, t) in terms {
                triangle_terms(t, scale * c, out)?;
            }
            Ok(())
        }
        _ => Err(Error::Unsupported("torus measurements support triangle indicators only".into())),
    }
}

pub fn project_fejer(f: &FunctionRep, n: usize) -> Result<Measurement> {
    match f.domain() {
        Domain::UnitInterval => {
            let c = fourier_coefficients(f, n as i64)?;
            Ok(Measurement { bandwidth: n, dim: 1, coeffs: pack_1d(n, |k| c[n + k]) })
        }
        Domain::Euclidean(2) => {
            f.validate()?;
            let mut terms = Vec::new();
            triangle_terms(f, 1.0, &mut terms)?;
            let coeff = |k: [i64; 2]| -> Complex64 {
                terms.iter().map(|(c, t)| torus::triangle_coefficient(t, k) * *c).sum()
            };
            Ok(Measurement { bandwidth: n, dim: 2, coeffs: pack_2d(n, coeff) })
        }
        d => Err(Error::Unsupported(format!("no Fejér measurement for functions on {d:?}"))),
    }
}

/// `Q_N F(φ⁻¹(h))`.
pub fn measure_point(op: ForwardOp, family: &ManifoldFamily, h: &[f64], n: usize) -> Result<Measurement> {
    project_fejer(&apply_forward(op, &family.embed_coords(h)?)?, n)
}

/// Columns `Q_N dF(φ⁻¹)(h) e_j`, in closed form wherever one exists.
pub fn measured_jacobian(op: ForwardOp, family: &ManifoldFamily, h: &[f64], n: usize) -> Result<DMatrix<f64>> {
    let m = family.chart_dim();
    if !family.in_atlas(h) {
        return Err(Error::OutsideDomain(format!("{h:?} is outside the chart image")));
    }
    let columns: Vec<Vec<f64>> = match (op, family.tag()) {
        (ForwardOp::Identity, FamilyTag::Intervals) => interval_jump_columns(h, n, |_| 1.0),
        (ForwardOp::Multiplication { weight }, FamilyTag::Intervals) => {
            interval_jump_columns(h, n, |t| weight.value(t))
        }
        (ForwardOp::Identity, FamilyTag::Simplices) if family.chart_dim() == 6 => {
            let tri = [[h[0], h[1]], [h[2], h[3]], [h[4], h[5]]];
            if tri.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::OutsideDomain("triangle must lie in the unit square".into()));
            }
            let grads: Vec<[Complex64; 6]> = std::iter::once([0, 0])
                .chain(half_lattice(n))
                .map(|k| torus::triangle_coefficient_gradient(&tri, k))
                .collect();
            (0..6).map(|j| pack_2d(n, |k| half_lattice_lookup(&grads, n, k)[j])).collect()
        }
        _ => (0..m)
            .map(|j| {
                let mut e = vec![0.0; m];
                e[j] = 1.0;
                Ok(project_fejer(&chart_differential(op, family, h, &e)?, n)?.coeffs)
            })
            .collect::<Result<_>>()?,
    };
    let rows = columns.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(rows, m, |i, j| columns[j][i]))
}

fn half_lattice_lookup(grads: &[[Complex64; 6]], n: usize, k: [i64; 2]) -> [Complex64; 6] {
    // Index 0 is k = 0 and the half-lattice follows in packing order.
    let n = n as i64;
    let idx = if k[0] == 0 { k[1] } else { n + (k[0] - 1) * (2 * n + 1) + (k[1] + n) + 1 };
    grads[idx as usize]
}

/// For `u = g χ_[a,b]`: `∂_a ĉ_k = −g(a) e^{−2πika}`, `∂_b ĉ_k = g(b) e^{−2πikb}`.
fn interval_jump_columns(h: &[f64], n: usize, g: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    let col = |t: f64, sign: f64| {
        let gt = sign * g(t);
        pack_1d(n, |k| Complex64::new(0.0, -TAU * k as f64 * t).exp() * gt)
    };
    vec![col(h[0], -1.0), col(h[1], 1.0)]
}

/// `sup_ξ ‖F(ξ) − Q_N F(ξ)‖_{L¹}` over `samples` Halton points of K.
pub fn projection_deficit(op: ForwardOp, family: &ManifoldFamily, n: usize, samples: usize, seed: u64) -> Result<f64> {
    let points = family.sample_compact(samples, seed)?;
    if points.is_empty() {
        return Err(invalid("projection deficit needs at least one sample"));
    }
    let values = points
        .par_iter()
        .map(|x| deficit_at(op, family, &x.coords, n))
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// `‖F(ξ) − Q_N F(ξ)‖_{L¹(0,1)}` at one chart point.
pub fn deficit_at(op: ForwardOp, family: &ManifoldFamily, h: &[f64], n: usize) -> Result<f64> {
    let f = apply_forward(op, &family.embed_coords(h)?)?;
    if f.domain() != Domain::UnitInterval {
        return Err(Error::Unsupported("projection deficit is computed on [0, 1]".into()));
    }
    let m = project_fejer(&f, n)?;
    let bps = f.to_piecewise().map(|pl| pl.breakpoints().to_vec()).unwrap_or_default();
    let width = 1.0 / (4.0 * (n as f64 + 1.0));
    Ok(integrate_abs_pow(|t| f.eval_unchecked(&[t]) - m.evaluate(t), 0.0, 1.0, &bps, width, 1.0))
}
