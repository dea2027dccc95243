//! Empirical stability constants and exponents, the bandwidth search driven
//! by the projection deficit, and two witnesses of instability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::{apply_forward, ForwardOp};
use crate::funcspace::{lp_distance, lp_norm, Domain, FunctionRep, Weight};
use crate::manifolds::{euclid, sample_pairs, FamilyTag, ManifoldFamily, PairOptions};
use crate::measurement::{measure_point, projection_deficit, Measurement};
use crate::stats::{linear_fit, quantile};

/// Norm on the data space Y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum YNorm {
    /// `L^q` norm of `F(x) − F(y)`.
    Lp { q: f64 },
    /// Euclidean norm of packed measurements, i.e. the L² norm of the
    /// trigonometric polynomials.
    Parseval,
    /// L¹ norm of the trigonometric polynomials on `[0, 1]`.
    TrigL1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub pairs: usize,
    pub seed: u64,
    /// Exponent in `‖x − y‖ <= C ‖F(x) − F(y)‖^α`; the family's own α if unset.
    pub alpha: Option<f64>,
    pub y_norm: YNorm,
    pub near: PairOptions,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions { pairs: 10_000, seed: 0, alpha: None, y_norm: YNorm::Lp { q: 1.0 }, near: PairOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub near: bool,
    pub chart: f64,
    pub ambient: f64,
    pub data: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub family: FamilyTag,
    pub op: ForwardOp,
    pub p: f64,
    /// `None` for the unprojected map F.
    pub bandwidth: Option<usize>,
    pub pairs: usize,
    pub seed: u64,
    pub alpha: f64,
    pub y_norm: YNorm,
    /// `sup ‖x − y‖_X / ‖F(x) − F(y)‖_Y^α` over the sample: a lower estimate
    /// of the true constant.
    pub c_hat: f64,
    pub c_p99: f64,
    /// `sup ‖F(x) − F(y)‖_Y / ‖x − y‖_X`.
    pub lipschitz_hat: f64,
    /// Slope of `log ‖x − y‖_X` against `log |φ(x) − φ(y)|` over near pairs.
    pub alpha_hat: Option<f64>,
    pub near_fraction: f64,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
}

impl StabilityReport {
    /// Flags configurations whose sampled constant is infinite or absurd.
    pub fn is_stable(&self) -> bool {
        self.c_hat.is_finite() && self.c_hat < 1e8
    }
}

fn data_distance(
    op: ForwardOp,
    family: &ManifoldFamily,
    bandwidth: Option<usize>,
    y_norm: YNorm,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    match (bandwidth, y_norm) {
        (None, YNorm::Lp { q }) => {
            let fx = apply_forward(op, &family.embed_coords(x)?)?;
            let fy = apply_forward(op, &family.embed_coords(y)?)?;
            lp_distance(&fx, &fy, q)
        }
        (Some(n), YNorm::Parseval) => measure_point(op, family, x, n)?.distance(&measure_point(op, family, y, n)?),
        (Some(n), YNorm::TrigL1) => {
            let d = measure_point(op, family, x, n)?.sub(&measure_point(op, family, y, n)?)?;
            trig_l1(&d)
        }
        (b, y) => Err(invalid(format!("Y norm {y:?} does not apply to bandwidth {b:?}"))),
    }
}

/// `∫_0^1 |P(t)|` for the trigonometric polynomial represented by `m`.
pub fn trig_l1(m: &Measurement) -> Result<f64> {
    if m.dim != 1 {
        return Err(Error::Unsupported("trigonometric L¹ norm on [0, 1] only".into()));
    }
    let width = 1.0 / (4.0 * (m.bandwidth as f64 + 1.0));
    Ok(crate::quadrature::integrate_abs_pow(|t| m.evaluate(t), 0.0, 1.0, &[], width, 1.0))
}

fn run(
    family: &ManifoldFamily,
    op: ForwardOp,
    bandwidth: Option<usize>,
    opts: &StabilityOptions,
) -> Result<(StabilityReport, Vec<PairSample>)> {
    if opts.pairs < 100 {
        return Err(invalid("stability estimates need at least 100 pairs"));
    }
    if !op.accepts(family.ambient_domain()) {
        return Err(Error::DomainMismatch(format!("{op:?} on a {:?} family", family.tag())));
    }
    let alpha = opts.alpha.unwrap_or_else(|| family.alpha());
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("α must lie in (0, 1]"));
    }
    let pairs = sample_pairs(family.compact(), opts.pairs, opts.seed, opts.near)?;
    let samples = pairs
        .into_par_iter()
        .map(|pp| {
            let chart = euclid(&pp.x, &pp.y);
            let ambient = family.distance(&pp.x, &pp.y)?;
            let data = data_distance(op, family, bandwidth, opts.y_norm, &pp.x, &pp.y)?;
            Ok(PairSample { x: pp.x, y: pp.y, near: pp.near, chart, ambient, data })
        })
        .collect::<Result<Vec<_>>>()?;
    let distinct: Vec<&PairSample> = samples.iter().filter(|s| s.ambient > 0.0).collect();
    if distinct.is_empty() {
        return Err(Error::Degenerate("every sampled pair is a pair of equal points".into()));
    }
    let ratios: Vec<f64> = distinct
        .iter()
        .map(|s| if s.data > 0.0 { s.ambient / s.data.powf(alpha) } else { f64::INFINITY })
        .collect();
    let c_hat = ratios.iter().copied().fold(0.0, f64::max);
    let c_p99 = quantile(&ratios, 0.99);
    let lipschitz_hat = distinct.iter().map(|s| s.data / s.ambient).fold(0.0, f64::max);
    let near: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.near && s.ambient > 0.0 && s.chart > 0.0)
        .map(|s| (s.chart.ln(), s.ambient.ln()))
        .collect();
    let alpha_hat = linear_fit(&near).map(|f| f.slope);
    let report = StabilityReport {
        family: family.tag(),
        op,
        p: family.p(),
        bandwidth,
        pairs: samples.len(),
        seed: opts.seed,
        alpha,
        y_norm: opts.y_norm,
        c_hat,
        c_p99,
        lipschitz_hat,
        alpha_hat,
        near_fraction: opts.near.near_fraction,
        box_lo: family.compact().lo.clone(),
        box_hi: family.compact().hi.clone(),
    };
    Ok((report, samples))
}

/// Stability of the unprojected map F; `opts.y_norm` must be an `Lp` norm.
pub fn empirical_stability(
    family: &ManifoldFamily,
    op: ForwardOp,
    opts: &StabilityOptions,
) -> Result<(StabilityReport, Vec<PairSample>)> {
    run(family, op, None, opts)
}

/// Stability of `Q_N F` in the Parseval or trigonometric L¹ norm.
pub fn projected_stability(
    family: &ManifoldFamily,
    op: ForwardOp,
    bandwidth: usize,
    opts: &StabilityOptions,
) -> Result<(StabilityReport, Vec<PairSample>)> {
    run(family, op, Some(bandwidth), opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitScan {
    pub threshold: f64,
    /// `(N, sup_K ‖F − Q_N F‖_{L¹})` in grid order.
    pub curve: Vec<(usize, f64)>,
    pub n_star: Option<usize>,
}

/// Deficits along `grid` and the smallest N with deficit at most `δ/(4C)`.
pub fn deficit_scan(
    family: &ManifoldFamily,
    op: ForwardOp,
    c: f64,
    delta: f64,
    grid: &[usize],
    samples: usize,
    seed: u64,
) -> Result<DeficitScan> {
    if !(c > 0.0 && c.is_finite()) || !(delta >= 0.0) {
        return Err(invalid("need C > 0 and δ >= 0"));
    }
    if grid.is_empty() {
        return Err(invalid("empty bandwidth grid"));
    }
    let threshold = delta / (4.0 * c);
    let mut curve = Vec::with_capacity(grid.len());
    let mut n_star = None;
    for &n in grid {
        let d = projection_deficit(op, family, n, samples, seed)?;
        curve.push((n, d));
        if n_star.is_none() && d <= threshold {
            n_star = Some(n);
        }
    }
    Ok(DeficitScan { threshold, curve, n_star })
}

/// Sampled inputs to the deficit threshold `δ/(4C)`: the raw `Ĉ` of F in L¹
/// and the largest sampled ambient distance within K as δ.
pub fn sampled_threshold_inputs(family: &ManifoldFamily, op: ForwardOp, pairs: usize, seed: u64) -> Result<(f64, f64)> {
    let opts = StabilityOptions { pairs, seed, ..Default::default() };
    let (report, samples) = empirical_stability(family, op, &opts)?;
    let delta = samples.iter().map(|s| s.ambient).fold(0.0, f64::max);
    Ok((report.c_hat, delta))
}

/// The smallest grid bandwidth meeting the deficit threshold.
pub fn find_sufficient_n(
    family: &ManifoldFamily,
    op: ForwardOp,
    c: f64,
    delta: f64,
    grid: &[usize],
    samples: usize,
    seed: u64,
) -> Result<usize> {
    let scan = deficit_scan(family, op, c, delta, grid, samples, seed)?;
    scan.n_star.ok_or_else(|| {
        let curve: Vec<String> = scan.curve.iter().map(|(n, d)| format!("N={n}: {d:e}")).collect();
        Error::GridExhausted(format!("threshold {:e} not reached ({})", scan.threshold, curve.join(", ")))
    })
}

/// `f′(x) = 2x(sign x + sin(1/x)) − cos(1/x) + 1`, written as
/// `2x(sign x + sin(1/x)) + 2 sin²(1/(2x))` to avoid cancellation.
pub fn sin_counterexample_derivative(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let s = 1.0 / x;
    2.0 * x * (x.signum() + s.sin()) + 2.0 * (0.5 * s).sin().powi(2)
}

/// The same derivative at `x = 1/(2π s)` for `s > 0`, with both angles
/// `1/x = 2π s` and `1/(2x) = π s` reduced by whole turns before evaluation.
pub fn sin_counterexample_derivative_turns(s: f64) -> f64 {
    let x = 1.0 / (2.0 * std::f64::consts::PI * s);
    let frac = s - s.floor();
    let sin = (std::f64::consts::TAU * frac).sin();
    let half_sin = (std::f64::consts::PI * frac).sin();
    2.0 * x * (1.0 + sin) + 2.0 * half_sin * half_sin
}

/// `f′(x_k)` at `x_k = 1/(2kπ)`; equals `2 x_k = 1/(kπ)`.
pub fn counterexample_sin(ks: &[u64]) -> Result<Vec<f64>> {
    ks.iter()
        .map(|&k| {
            if k == 0 {
                return Err(invalid("k must be at least 1"));
            }
            Ok(sin_counterexample_derivative_turns(k as f64))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRatio {
    pub t: f64,
    pub alpha: f64,
    /// `‖g (χ_[t,t+1] − χ_[0,1])‖_{L¹}`.
    pub numerator: f64,
    /// `‖χ_[t,t+1] − χ_[0,1]‖_{L¹}`.
    pub denominator: f64,
    pub ratio: f64,
    /// `2^{α−1} e^{−α/t} / t^{1−α}`.
    pub bound: f64,
}

fn unit_window(start: f64) -> Result<FunctionRep> {
    FunctionRep::ball(vec![start + 0.5], 0.5)
}

/// Hölder quotients of multiplication by the periodic weight on the shifted windows.
pub fn counterexample_weight(ts: &[f64], alpha: f64) -> Result<Vec<WeightRatio>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("α must lie in (0, 1]"));
    }
    let op = ForwardOp::Multiplication { weight: Weight::PeriodicExpInverse };
    ts.iter()
        .map(|&t| {
            if !(t > 0.0 && t < 1.0) {
                return Err(invalid(format!("t must lie in (0, 1), got {t}")));
            }
            let (shifted, base) = (unit_window(t)?, unit_window(0.0)?);
            let diff = FunctionRep::combination(Domain::Euclidean(1), vec![(1.0, shifted.clone()), (-1.0, base.clone())])?;
            let numerator = lp_norm(&apply_forward(op, &diff)?, 1.0)?;
            let denominator = lp_distance(&shifted, &base, 1.0)?;
            let bound = 2f64.powf(alpha - 1.0) * (-alpha / t).exp() / t.powf(1.0 - alpha);
            Ok(WeightRatio { t, alpha, numerator, denominator, ratio: numerator.powf(alpha) / denominator, bound })
        })
        .collect()
}
