//! Forward operators and the differential of `F ∘ φ⁻¹`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::funcspace::{lp_norm, Domain, FunctionRep, PiecewiseLinear, Weight};
use crate::manifolds::{gaussian_chart_derivative, FamilyTag, ManifoldFamily};
use crate::quadrature::integrate;

/// Grid used for cumulative integrals without a closed form.
const CUMULATIVE_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForwardOp {
    /// `F(u)(t) = ∫_0^t u(s) ds` on `L¹(0,1)`.
    Integration,
    /// `F(u) = g u` for a one-dimensional weight g.
    Multiplication { weight: Weight },
    Identity,
}

impl ForwardOp {
    pub fn accepts(self, domain: Domain) -> bool {
        match self {
            ForwardOp::Integration => domain == Domain::UnitInterval,
            ForwardOp::Multiplication { .. } => domain.dim() == 1,
            ForwardOp::Identity => true,
        }
    }

    pub fn is_linear(self) -> bool {
        true
    }
}

pub fn apply_forward(op: ForwardOp, f: &FunctionRep) -> Result<FunctionRep> {
    if !op.accepts(f.domain()) {
        return Err(Error::DomainMismatch(format!("{op:?} cannot act on functions over {:?}", f.domain())));
    }
    f.validate()?;
    match op {
        ForwardOp::Identity => Ok(f.clone()),
        ForwardOp::Multiplication { weight } => Ok(FunctionRep::Modulated { weight, inner: Box::new(f.clone()) }),
        ForwardOp::Integration => match f.to_piecewise() {
            Some(pl) if pl.slopes().iter().all(|s| *s == 0.0) => {
                Ok(FunctionRep::PiecewiseLinear(antiderivative_of_step(&pl)))
            }
            _ => cumulative_on_grid(f),
        },
    }
}

/// The antiderivative vanishing at 0 of a piecewise constant function,
/// which is continuous and piecewise linear up to `t = 1`.
fn antiderivative_of_step(pl: &PiecewiseLinear) -> PiecewiseLinear {
    let mut bps = Vec::new();
    let mut slopes = Vec::new();
    let mut offsets = Vec::new();
    let mut acc = 0.0;
    for (t0, t1, c, _) in pl.pieces() {
        if t1 <= t0 {
            continue;
        }
        if bps.is_empty() {
            bps.push(t0);
        }
        slopes.push(c);
        offsets.push(acc);
        acc += c * (t1 - t0);
        bps.push(t1);
    }
    if bps.is_empty() {
        return PiecewiseLinear::zero();
    }
    if *bps.last().unwrap() < 1.0 {
        slopes.push(0.0);
        offsets.push(acc);
        bps.push(1.0);
    }
    PiecewiseLinear::new(bps, slopes, offsets).expect("knots are increasing by construction")
}

fn cumulative_on_grid(f: &FunctionRep) -> Result<FunctionRep> {
    let m = CUMULATIVE_GRID;
    let bps = f.to_piecewise().map(|pl| pl.breakpoints().to_vec()).unwrap_or_default();
    let mut values = Vec::with_capacity(m + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for j in 0..m {
        let (t0, t1) = (j as f64 / m as f64, (j + 1) as f64 / m as f64);
        acc += integrate(|t| f.eval_unchecked(&[t]), t0, t1, &bps, 1.0);
        values.push(acc);
    }
    FunctionRep::sampled(values)
}

/// `d/ds F(φ⁻¹(h + s v))` at `s = 0`.
pub fn chart_differential(op: ForwardOp, family: &ManifoldFamily, h: &[f64], direction: &[f64]) -> Result<FunctionRep> {
    check_chart_point(family, h, direction)?;
    match (op, family.tag()) {
        (ForwardOp::Integration, FamilyTag::Intervals) => {
            let terms = vec![
                (direction[1], FunctionRep::interval(h[1], 1.0)?),
                (-direction[0], FunctionRep::interval(h[0], 1.0)?),
            ];
            FunctionRep::combination(Domain::UnitInterval, terms)
        }
        (ForwardOp::Identity, FamilyTag::Gaussians) => gaussian_chart_derivative(h, direction),
        _ => chart_differential_fallback(op, family, h, direction),
    }
}

/// Central difference with step `10⁻⁶ (1 + |h|)` along the normalized direction.
pub fn chart_differential_fallback(
    op: ForwardOp,
    family: &ManifoldFamily,
    h: &[f64],
    direction: &[f64],
) -> Result<FunctionRep> {
    check_chart_point(family, h, direction)?;
    let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
    let domain = family.ambient_domain();
    if norm == 0.0 {
        return Ok(FunctionRep::zero(domain));
    }
    let step = fd_step(h);
    let shifted = |s: f64| -> Vec<f64> { h.iter().zip(direction).map(|(x, d)| x + s * d / norm).collect() };
    let (hp, hm) = (shifted(step), shifted(-step));
    if !family.in_chart(&hp) || !family.in_chart(&hm) {
        return Err(Error::OutsideDomain("finite-difference stencil leaves the chart image".into()));
    }
    let fp = apply_forward(op, &family.embed_coords(&hp)?)?;
    let fm = apply_forward(op, &family.embed_coords(&hm)?)?;
    let c = norm / (2.0 * step);
    FunctionRep::combination(domain, vec![(c, fp), (-c, fm)])
}

pub(crate) fn fd_step(h: &[f64]) -> f64 {
    let hn = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    let step = 1e-6 * (1.0 + hn);
    debug_assert!(step > f64::MIN_POSITIVE);
    step
}

fn check_chart_point(family: &ManifoldFamily, h: &[f64], direction: &[f64]) -> Result<()> {
    if direction.len() != family.chart_dim() {
        return Err(invalid("direction has the wrong dimension"));
    }
    if !family.in_chart(h) {
        return Err(Error::OutsideDomain(format!("{h:?} is outside the chart image")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityModulus {
    /// Largest swept value: a lower bound for the operator-norm distance.
    pub value: f64,
    pub directions: usize,
}

/// `sup_{|v| = 1} ‖dF_{h1} v − dF_{h2} v‖_{L¹}` over `directions` equally
/// spaced unit vectors of the interval chart.
pub fn differential_continuity_modulus(
    family: &ManifoldFamily,
    h1: &[f64],
    h2: &[f64],
    directions: usize,
) -> Result<ContinuityModulus> {
    if family.tag() != FamilyTag::Intervals {
        return Err(Error::Unsupported("continuity modulus is available for the interval family".into()));
    }
    if directions == 0 {
        return Err(invalid("need at least one direction"));
    }
    let mut value: f64 = 0.0;
    for j in 0..directions {
        let th = std::f64::consts::TAU * j as f64 / directions as f64;
        let v = [th.cos(), th.sin()];
        let d1 = chart_differential(ForwardOp::Integration, family, h1, &v)?;
        let d2 = chart_differential(ForwardOp::Integration, family, h2, &v)?;
        value = value.max(lp_norm(&d1.minus(&d2)?, 1.0)?);
    }
    Ok(ContinuityModulus { value, directions })
}
