//! Functions on `[0,1]` and `R^n` in closed form, with exact L^p norms,
//! pointwise evaluation and Fourier coefficients on `[0,1]`.
//!
//! Indicators are closed on the left (`a <= t < b`, except that `b = 1`
//! includes `t = 1`) and balls and simplexes are closed. These choices only
//! affect pointwise values on null sets.

mod gauss;
mod norms;
mod piecewise;

pub use norms::{fourier_coefficients, fourier_coefficients_quadrature, lp_distance, lp_norm};
pub use piecewise::PiecewiseLinear;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::SimplexParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    UnitInterval,
    Euclidean(usize),
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::UnitInterval => 1,
            Domain::Euclidean(n) => n,
        }
    }
}

/// Multiplicative weights used by the multiplication operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Weight {
    /// The 1-periodic `g(t) = exp(-1/τ)` with `τ = t - ⌈t⌉ + 1 ∈ (0, 1]`.
    PeriodicExpInverse,
}

impl Weight {
    pub fn value(self, t: f64) -> f64 {
        match self {
            Weight::PeriodicExpInverse => {
                let tau = t - t.ceil() + 1.0;
                (-1.0 / tau).exp()
            }
        }
    }

    /// Points of discontinuity inside `[lo, hi]`.
    pub fn breakpoints(self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            Weight::PeriodicExpInverse => {
                let first = lo.ceil() as i64;
                let last = hi.floor() as i64;
                (first..=last).map(|k| k as f64).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FunctionRep {
    IntervalIndicator { a: f64, b: f64, intensity: f64 },
    PiecewiseLinear(PiecewiseLinear),
    BallIndicator { centre: Vec<f64>, radius: f64, intensity: f64 },
    /// `z ↦ exp(-|z - centre|²)`.
    GaussianBump { centre: Vec<f64> },
    /// `z ↦ 2 exp(-|z - centre|²) ⟨z - centre, direction⟩`.
    GaussianDirectional { centre: Vec<f64>, direction: Vec<f64> },
    SimplexIndicator { simplex: SimplexParams, intensity: f64 },
    /// Values on the uniform grid `j / (len - 1)` of `[0, 1]`, linearly interpolated.
    SampledGrid { values: Vec<f64> },
    Modulated { weight: Weight, inner: Box<FunctionRep> },
    Combination { domain: Domain, terms: Vec<(f64, FunctionRep)> },
}

impl FunctionRep {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::interval_with_intensity(a, b, 1.0)
    }

    pub fn interval_with_intensity(a: f64, b: f64, intensity: f64) -> Result<Self> {
        let f = FunctionRep::IntervalIndicator { a, b, intensity };
        f.validate()?;
        Ok(f)
    }

    pub fn ball(centre: Vec<f64>, radius: f64) -> Result<Self> {
        Self::ball_with_intensity(centre, radius, 1.0)
    }

    pub fn ball_with_intensity(centre: Vec<f64>, radius: f64, intensity: f64) -> Result<Self> {
        let f = FunctionRep::BallIndicator { centre, radius, intensity };
        f.validate()?;
        Ok(f)
    }

    pub fn gaussian(centre: Vec<f64>) -> Result<Self> {
        let f = FunctionRep::GaussianBump { centre };
        f.validate()?;
        Ok(f)
    }

    pub fn simplex(vertices: Vec<Vec<f64>>) -> Result<Self> {
        Ok(FunctionRep::SimplexIndicator { simplex: SimplexParams::new(vertices)?, intensity: 1.0 })
    }

    pub fn sampled(values: Vec<f64>) -> Result<Self> {
        let f = FunctionRep::SampledGrid { values };
        f.validate()?;
        Ok(f)
    }

    pub fn zero(domain: Domain) -> Self {
        FunctionRep::Combination { domain, terms: vec![] }
    }

    /// `Σ c_j f_j`; all terms must share `domain`.
    pub fn combination(domain: Domain, terms: Vec<(f64, FunctionRep)>) -> Result<Self> {
        let f = FunctionRep::Combination { domain, terms };
        f.validate()?;
        Ok(f)
    }

    pub fn scaled(self, c: f64) -> Self {
        let domain = self.domain();
        FunctionRep::Combination { domain, terms: vec![(c, self)] }
    }

    /// `self - other`, checking that domains agree.
    pub fn minus(&self, other: &FunctionRep) -> Result<Self> {
        let d = self.domain();
        if d != other.domain() {
            return Err(Error::DomainMismatch(format!("{d:?} vs {:?}", other.domain())));
        }
        Ok(FunctionRep::Combination { domain: d, terms: vec![(1.0, self.clone()), (-1.0, other.clone())] })
    }

    pub fn domain(&self) -> Domain {
        match self {
            FunctionRep::IntervalIndicator { .. }
            | FunctionRep::PiecewiseLinear(_)
            | FunctionRep::SampledGrid { .. } => Domain::UnitInterval,
            FunctionRep::BallIndicator { centre, .. }
            | FunctionRep::GaussianBump { centre }
            | FunctionRep::GaussianDirectional { centre, .. } => Domain::Euclidean(centre.len()),
            FunctionRep::SimplexIndicator { simplex, .. } => Domain::Euclidean(simplex.dim()),
            FunctionRep::Modulated { inner, .. } => inner.domain(),
            FunctionRep::Combination { domain, .. } => *domain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FunctionRep::IntervalIndicator { a, b, intensity } => {
                if !(0.0 <= *a && a < b && *b <= 1.0) {
                    return Err(invalid(format!("interval needs 0 <= a < b <= 1, got [{a}, {b}]")));
                }
                if !(*intensity > 0.0 && intensity.is_finite()) {
                    return Err(invalid("interval intensity must be positive"));
                }
            }
            FunctionRep::PiecewiseLinear(_) => {}
            FunctionRep::BallIndicator { centre, radius, intensity } => {
                if centre.is_empty() || centre.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("ball centre must be a finite point of R^n"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("ball radius must be positive"));
                }
                if !(*intensity > 0.0 && intensity.is_finite()) {
                    return Err(invalid("ball intensity must be positive"));
                }
            }
            FunctionRep::GaussianBump { centre } => {
                if centre.is_empty() || centre.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("Gaussian centre must be a finite point of R^n"));
                }
            }
            FunctionRep::GaussianDirectional { centre, direction } => {
                if centre.is_empty() || direction.len() != centre.len() {
                    return Err(invalid("direction must have the dimension of the centre"));
                }
            }
            FunctionRep::SimplexIndicator { intensity, .. } => {
                if !(*intensity > 0.0 && intensity.is_finite()) {
                    return Err(invalid("simplex intensity must be positive"));
                }
            }
            FunctionRep::SampledGrid { values } => {
                if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("sampled grid needs at least two finite values"));
                }
            }
            FunctionRep::Modulated { inner, .. } => {
                if inner.domain().dim() != 1 {
                    return Err(Error::DomainMismatch("weights act on functions of one variable".into()));
                }
                inner.validate()?;
            }
            FunctionRep::Combination { domain, terms } => {
                for (c, t) in terms {
                    if !c.is_finite() {
                        return Err(invalid("combination coefficients must be finite"));
                    }
                    if t.domain() != *domain {
                        return Err(Error::DomainMismatch(format!(
                            "term on {:?} in a combination on {domain:?}",
                            t.domain()
                        )));
                    }
                    t.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Pointwise value.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let domain = self.domain();
        if x.len() != domain.dim() {
            return Err(Error::OutsideDomain(format!(
                "point of dimension {} for a function on {domain:?}",
                x.len()
            )));
        }
        if domain == Domain::UnitInterval && !(0.0..=1.0).contains(&x[0]) {
            return Err(Error::OutsideDomain(format!("t = {} not in [0, 1]", x[0])));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            FunctionRep::IntervalIndicator { a, b, intensity } => {
                let t = x[0];
                if (*a <= t && t < *b) || (t == 1.0 && *b == 1.0) {
                    *intensity
                } else {
                    0.0
                }
            }
            FunctionRep::PiecewiseLinear(pl) => pl.evaluate(x[0]),
            FunctionRep::BallIndicator { centre, radius, intensity } => {
                let d2: f64 = centre.iter().zip(x).map(|(c, z)| (z - c) * (z - c)).sum();
                if d2 <= radius * radius {
                    *intensity
                } else {
                    0.0
                }
            }
            FunctionRep::GaussianBump { centre } => {
                let d2: f64 = centre.iter().zip(x).map(|(c, z)| (z - c) * (z - c)).sum();
                (-d2).exp()
            }
            FunctionRep::GaussianDirectional { centre, direction } => {
                let d2: f64 = centre.iter().zip(x).map(|(c, z)| (z - c) * (z - c)).sum();
                let dot: f64 = centre.iter().zip(x).zip(direction).map(|((c, z), h)| (z - c) * h).sum();
                2.0 * (-d2).exp() * dot
            }
            FunctionRep::SimplexIndicator { simplex, intensity } => {
                if simplex.contains(x) {
                    *intensity
                } else {
                    0.0
                }
            }
            FunctionRep::SampledGrid { values } => sampled_value(values, x[0]),
            FunctionRep::Modulated { weight, inner } => weight.value(x[0]) * inner.eval_unchecked(x),
            FunctionRep::Combination { terms, .. } => {
                terms.iter().map(|(c, t)| c * t.eval_unchecked(x)).sum()
            }
        }
    }

    /// Exact piecewise-linear form of a function on `[0, 1]`, if it has one.
    pub fn to_piecewise(&self) -> Option<PiecewiseLinear> {
        match self {
            FunctionRep::IntervalIndicator { a, b, intensity } => {
                PiecewiseLinear::step(*a, *b, *intensity).ok()
            }
            FunctionRep::PiecewiseLinear(pl) => Some(pl.clone()),
            FunctionRep::SampledGrid { values } => {
                let m = values.len() - 1;
                let h = 1.0 / m as f64;
                let bp: Vec<f64> = (0..=m).map(|j| if j == m { 1.0 } else { j as f64 * h }).collect();
                let slopes = (0..m).map(|j| (values[j + 1] - values[j]) / (bp[j + 1] - bp[j])).collect();
                PiecewiseLinear::new(bp, slopes, values[..m].to_vec()).ok()
            }
            FunctionRep::Combination { domain: Domain::UnitInterval, terms } => {
                let parts: Vec<(f64, PiecewiseLinear)> = terms
                    .iter()
                    .map(|(c, t)| t.to_piecewise().map(|p| (*c, p)))
                    .collect::<Option<_>>()?;
                let refs: Vec<(f64, &PiecewiseLinear)> = parts.iter().map(|(c, p)| (*c, p)).collect();
                Some(PiecewiseLinear::linear_combination(&refs))
            }
            _ => None,
        }
    }
}

fn sampled_value(values: &[f64], t: f64) -> f64 {
    let m = values.len() - 1;
    let s = (t * m as f64).clamp(0.0, m as f64);
    let j = (s.floor() as usize).min(m - 1);
    let frac = s - j as f64;
    values[j] + frac * (values[j + 1] - values[j])
}
