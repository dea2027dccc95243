use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::gauss_panel;

/// A piecewise-linear function on `[t_0, t_k] ⊆ [0, 1]`, zero elsewhere.
///
/// On `[t_i, t_{i+1})` the value is `offsets[i] + slopes[i] * (t - t_i)`.
/// The last piece is closed at `t_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    offsets: Vec<f64>,
}

/// `e^{-2πi x}` with the argument reduced in turns for accuracy.
pub(crate) fn turn(x: f64) -> Complex64 {
    let r = x - x.round();
    let theta = -2.0 * std::f64::consts::PI * r;
    Complex64::new(theta.cos(), theta.sin())
}

impl PiecewiseLinear {
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(invalid("piecewise-linear function needs at least two breakpoints"));
        }
        if slopes.len() != breakpoints.len() - 1 || offsets.len() != slopes.len() {
            return Err(invalid("need one slope and one offset per piece"));
        }
        if breakpoints[0] < 0.0 || *breakpoints.last().unwrap() > 1.0 {
            return Err(invalid("breakpoints must lie in [0, 1]"));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("breakpoints must be strictly increasing"));
        }
        if slopes.iter().chain(&offsets).any(|x| !x.is_finite()) {
            return Err(invalid("slopes and offsets must be finite"));
        }
        Ok(PiecewiseLinear { breakpoints, slopes, offsets })
    }

    pub fn zero() -> Self {
        PiecewiseLinear { breakpoints: vec![0.0, 1.0], slopes: vec![0.0], offsets: vec![0.0] }
    }

    /// The piecewise-constant function `value` on `[a, b)`, zero elsewhere on [0, 1].
    pub fn step(a: f64, b: f64, value: f64) -> Result<Self> {
        let mut bp = vec![0.0];
        let mut vals = vec![];
        if a > 0.0 {
            bp.push(a);
            vals.push(0.0);
        }
        bp.push(b);
        vals.push(value);
        if b < 1.0 {
            bp.push(1.0);
            vals.push(0.0);
        }
        let n = vals.len();
        Self::new(bp, vec![0.0; n], vals)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Iterates `(t_i, t_{i+1}, offset_i, slope_i)`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        (0..self.slopes.len()).map(move |i| {
            (self.breakpoints[i], self.breakpoints[i + 1], self.offsets[i], self.slopes[i])
        })
    }

    fn piece_index(&self, t: f64) -> Option<usize> {
        let bp = &self.breakpoints;
        let last = *bp.last().unwrap();
        if t < bp[0] || t > last {
            return None;
        }
        if t == last {
            return Some(self.slopes.len() - 1);
        }
        Some(bp.partition_point(|&x| x <= t) - 1)
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        match self.piece_index(t) {
            Some(i) => self.offsets[i] + self.slopes[i] * (t - self.breakpoints[i]),
            None => 0.0,
        }
    }

    /// Right limit of the value and slope at `t`; zero outside the support.
    fn right_local(&self, t: f64) -> (f64, f64) {
        let bp = &self.breakpoints;
        if t < bp[0] || t >= *bp.last().unwrap() {
            return (0.0, 0.0);
        }
        let i = bp.partition_point(|&x| x <= t) - 1;
        (self.offsets[i] + self.slopes[i] * (t - bp[i]), self.slopes[i])
    }

    /// `Σ c_j f_j` on the union of all breakpoints and {0, 1}.
    pub fn linear_combination(terms: &[(f64, &PiecewiseLinear)]) -> PiecewiseLinear {
        let mut knots: Vec<f64> = terms
            .iter()
            .flat_map(|(_, f)| f.breakpoints.iter().copied())
            .chain([0.0, 1.0])
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut slopes = Vec::with_capacity(knots.len() - 1);
        let mut offsets = Vec::with_capacity(knots.len() - 1);
        for &t in &knots[..knots.len() - 1] {
            let (mut v, mut s) = (0.0, 0.0);
            for (c, f) in terms {
                let (fv, fs) = f.right_local(t);
                v += c * fv;
                s += c * fs;
            }
            offsets.push(v);
            slopes.push(s);
        }
        PiecewiseLinear { breakpoints: knots, slopes, offsets }
    }

    pub fn integral(&self) -> f64 {
        self.pieces().map(|(a, b, o, s)| (b - a) * (o + 0.5 * s * (b - a))).sum()
    }

    /// Exact `∫ |f|^p`.
    pub fn abs_pow_integral(&self, p: f64) -> f64 {
        self.pieces().map(|(a, b, o, s)| linear_abs_pow(o, s, b - a, p)).sum()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        self.abs_pow_integral(p).powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.pieces()
            .filter(|(a, b, _, _)| b > a)
            .map(|(a, b, o, s)| o.abs().max((o + s * (b - a)).abs()))
            .fold(0.0, f64::max)
    }

    /// `c_k = ∫_0^1 f(t) e^{-2πikt} dt` in closed form.
    pub fn fourier_coefficient(&self, k: i64) -> Complex64 {
        if k == 0 {
            return Complex64::new(self.integral(), 0.0);
        }
        let omega = 2.0 * std::f64::consts::PI * k as f64;
        let i_omega = Complex64::new(0.0, omega);
        let kf = k as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b, o, s) in self.pieces() {
            let ea = turn(kf * a);
            let eb = turn(kf * b);
            let base = (ea - eb) / i_omega;
            let ramp = -(b - a) * eb / i_omega - (ea - eb) / (omega * omega);
            acc += o * base + s * ramp;
        }
        acc
    }
}

/// `∫_0^len |o + s τ|^p dτ`.
fn linear_abs_pow(o: f64, s: f64, len: f64, p: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let v0 = o;
    let v1 = o + s * len;
    if s == 0.0 {
        return v0.abs().powf(p) * len;
    }
    let q = p + 1.0;
    let (a0, a1) = (v0.abs(), v1.abs());
    if v0 * v1 < 0.0 {
        return (a0.powf(q) + a1.powf(q)) / (q * s.abs());
    }
    let (lo, hi) = if a0 < a1 { (a0, a1) } else { (a1, a0) };
    if lo <= 0.5 * hi {
        (hi.powf(q) - lo.powf(q)) / (q * s.abs())
    } else {
        // Nearly constant magnitude: the closed form would cancel, while
        // the integrand is smooth and bounded away from zero.
        let mut f = |tau: f64| (o + s * tau).abs().powf(p);
        gauss_panel(0.0, len, &mut f)
    }
}
