//! Concrete manifold families with a single chart each (several for
//! simplexes), their compact sets K and regularity constants.
//!
//! Chart distance is always the Euclidean norm of the coordinate difference.
//! The Hölder data `(α, ℓ)` combine two one-sided bounds on K:
//!
//! * `ℓ_H ‖x − y‖_X <= |φ(x) − φ(y)|^α` (φ⁻¹ is α-Hölder),
//! * `|φ(x) − φ(y)| <= ℓ_L⁻¹ ‖x − y‖_X` (φ is Lipschitz),
//!
//! and `ℓ = min(ℓ_H, ℓ_L)` satisfies both.

mod compact;
mod simplex_chart;

pub use compact::{sample_compact, sample_pairs, CompactSetSpec, Constraint, PairOptions, PointPair};
pub use simplex_chart::SimplexChart;

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::funcspace::{lp_distance, Domain, FunctionRep};
use crate::geometry::{unit_ball_volume, SimplexParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Intervals,
    Balls,
    BallsIntensity,
    Gaussians,
    Simplices,
}

fn default_margin() -> f64 {
    0.1
}

/// Parameters of a family. `margin` is the fraction of each parameter range
/// removed on both sides to obtain K inside the open chart image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `χ_[a,b]` with `0 < a < b < 1`, `b − a > ε`; K: `a, b ∈ [ε, 1−ε]`, `b − a >= 2ε`.
    Intervals { epsilon: f64 },
    /// `χ_B(a,r)` with `|a| < A`, `ρ < r < R`, in L^p.
    Balls {
        dim: usize,
        p: f64,
        a_max: f64,
        rho: f64,
        r_max: f64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// `λ χ_B(a,r)` with `|a| < A`, `λ, r ∈ (ρ, R)`, in L^1.
    BallsIntensity {
        dim: usize,
        a_max: f64,
        rho: f64,
        r_max: f64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// `G_a(z) = exp(−|z − a|²)`, `a ∈ R^n`, in L^p; K: `a ∈ [−w, w]^n`.
    Gaussians { dim: usize, p: f64, half_width: f64 },
    /// `χ_T` for simplexes near `reference` with edges shorter than μ, in L^1.
    /// K: every vertex within `R_T / (2√n)` of its reference vertex per coordinate.
    Simplices { mu: f64, reference: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantSource {
    Analytic,
    /// Half the infimum of the sampled ratios.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderData {
    pub alpha: f64,
    /// `min(ell_holder, ell_chart)`.
    pub ell: f64,
    pub ell_holder: f64,
    pub ell_chart: f64,
    pub source: ConstantSource,
}

/// A point of a family in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub family: FamilyTag,
    pub coords: Vec<f64>,
}

#[derive(Debug)]
pub struct ManifoldFamily {
    spec: FamilySpec,
    compact: CompactSetSpec,
    simplex_chart: Option<SimplexChart>,
    holder: OnceLock<HolderData>,
}

impl Clone for ManifoldFamily {
    fn clone(&self) -> Self {
        let holder = OnceLock::new();
        if let Some(h) = self.holder.get() {
            let _ = holder.set(*h);
        }
        ManifoldFamily {
            spec: self.spec.clone(),
            compact: self.compact.clone(),
            simplex_chart: self.simplex_chart.clone(),
            holder,
        }
    }
}

/// Seed of the pair sample used to estimate ℓ.
const CALIBRATION_SEED: u64 = 0x5eed_0f_e11;

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

impl ManifoldFamily {
    pub fn new(spec: FamilySpec) -> Result<Self> {
        let (compact, simplex_chart) = match &spec {
            FamilySpec::Intervals { epsilon } => {
                let e = *epsilon;
                if !(e > 0.0 && e < 0.25) {
                    return Err(invalid(format!("need 0 < ε < 1/4, got {e}")));
                }
                let k = CompactSetSpec::new(
                    vec![e, e],
                    vec![1.0 - e, 1.0 - e],
                    Constraint::MinGap { gap: 2.0 * e },
                    e / 2.0,
                )?;
                (k, None)
            }
            FamilySpec::Balls { dim, a_max, rho, r_max, margin, .. }
            | FamilySpec::BallsIntensity { dim, a_max, rho, r_max, margin } => {
                let p = if let FamilySpec::Balls { p, .. } = &spec { *p } else { 1.0 };
                if *dim == 0 || *dim > 6 {
                    return Err(invalid("ball families support 1 <= n <= 6"));
                }
                if !(p >= 1.0 && p.is_finite()) {
                    return Err(invalid("ball indicators need 1 <= p < ∞"));
                }
                positive("A", *a_max)?;
                positive("ρ", *rho)?;
                if !(r_max > rho) {
                    return Err(invalid("need ρ < R"));
                }
                if !(*margin > 0.0 && *margin < 0.5) {
                    return Err(invalid("margin must lie in (0, 1/2)"));
                }
                let ma = margin * a_max;
                let mr = margin * (r_max - rho);
                let n = *dim;
                let intensity = matches!(spec, FamilySpec::BallsIntensity { .. });
                let mut lo = vec![-(a_max - ma); n];
                let mut hi = vec![a_max - ma; n];
                let ranges = if intensity { 2 } else { 1 };
                for _ in 0..ranges {
                    lo.push(rho + mr);
                    hi.push(r_max - mr);
                }
                // Half the ambient distance from K to the degenerate limit r = ρ.
                let scale = if intensity { rho + mr } else { 1.0 };
                let gap_volume = unit_ball_volume(n) * ((rho + mr).powi(n as i32) - rho.powi(n as i32));
                let delta = 0.5 * (scale * gap_volume).powf(1.0 / p);
                let k = CompactSetSpec::new(lo, hi, Constraint::CentreBall { dims: n, radius: a_max - ma }, delta)?;
                (k, None)
            }
            FamilySpec::Gaussians { dim, p, half_width } => {
                if *dim == 0 || *dim > 6 {
                    return Err(invalid("Gaussian families support 1 <= n <= 6"));
                }
                if !(*p >= 1.0 && p.is_finite()) {
                    return Err(invalid("Gaussians are treated in L^p with 1 <= p < ∞"));
                }
                positive("half width", *half_width)?;
                let k = CompactSetSpec::new(
                    vec![-half_width; *dim],
                    vec![*half_width; *dim],
                    Constraint::None,
                    f64::INFINITY,
                )?;
                (k, None)
            }
            FamilySpec::Simplices { mu, reference } => {
                let t = SimplexParams::new(reference.clone())?;
                let n = t.dim();
                if n > 3 {
                    return Err(Error::Unsupported("simplex families need n <= 3".into()));
                }
                let chart = SimplexChart::new(&t);
                if !(*mu > t.max_edge() + chart.radius) {
                    return Err(invalid(format!(
                        "μ = {mu} must exceed the longest reference edge plus R_T = {}",
                        t.max_edge() + chart.radius
                    )));
                }
                let s = chart.radius / (2.0 * (n as f64).sqrt());
                let centre: Vec<f64> = chart.centre.iter().flatten().copied().collect();
                let lo = centre.iter().map(|c| c - s).collect();
                let hi = centre.iter().map(|c| c + s).collect();
                // δ needs ℓ_L, which is only known after sampling; set below.
                let k = CompactSetSpec::new(lo, hi, Constraint::None, f64::INFINITY)?;
                (k, Some(chart))
            }
        };
        let mut fam = ManifoldFamily { spec, compact, simplex_chart, holder: OnceLock::new() };
        if fam.tag() == FamilyTag::Simplices {
            let margin = fam.simplex_chart.as_ref().unwrap().radius / 2.0;
            fam.compact.delta = 0.5 * fam.holder_data().ell_chart * margin;
        }
        Ok(fam)
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn compact(&self) -> &CompactSetSpec {
        &self.compact
    }

    pub fn tag(&self) -> FamilyTag {
        match self.spec {
            FamilySpec::Intervals { .. } => FamilyTag::Intervals,
            FamilySpec::Balls { .. } => FamilyTag::Balls,
            FamilySpec::BallsIntensity { .. } => FamilyTag::BallsIntensity,
            FamilySpec::Gaussians { .. } => FamilyTag::Gaussians,
            FamilySpec::Simplices { .. } => FamilyTag::Simplices,
        }
    }

    /// Ambient exponent p of X = L^p.
    pub fn p(&self) -> f64 {
        match &self.spec {
            FamilySpec::Balls { p, .. } | FamilySpec::Gaussians { p, .. } => *p,
            _ => 1.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self.tag() {
            FamilyTag::Balls => 1.0 / self.p(),
            _ => 1.0,
        }
    }

    pub fn chart_dim(&self) -> usize {
        self.compact.dim()
    }

    pub fn ambient_domain(&self) -> Domain {
        match &self.spec {
            FamilySpec::Intervals { .. } => Domain::UnitInterval,
            FamilySpec::Balls { dim, .. }
            | FamilySpec::BallsIntensity { dim, .. }
            | FamilySpec::Gaussians { dim, .. } => Domain::Euclidean(*dim),
            FamilySpec::Simplices { reference, .. } => Domain::Euclidean(reference.len() - 1),
        }
    }

    /// The reference chart of a simplex family.
    pub fn simplex_chart(&self) -> Option<&SimplexChart> {
        self.simplex_chart.as_ref()
    }

    pub fn point(&self, coords: Vec<f64>) -> Result<ModelPoint> {
        let x = ModelPoint { family: self.tag(), coords };
        self.check(&x)?;
        Ok(x)
    }

    /// Whether `h` lies in the open chart image.
    pub fn in_chart(&self, h: &[f64]) -> bool {
        if h.len() != self.chart_dim() || h.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match &self.spec {
            FamilySpec::Intervals { epsilon } => 0.0 < h[0] && h[0] < h[1] && h[1] < 1.0 && h[1] - h[0] > *epsilon,
            FamilySpec::Balls { dim, a_max, rho, r_max, .. } => {
                centre_norm(h, *dim) < *a_max && h[*dim] > *rho && h[*dim] < *r_max
            }
            FamilySpec::BallsIntensity { dim, a_max, rho, r_max, .. } => {
                centre_norm(h, *dim) < *a_max
                    && (*dim..dim + 2).all(|i| h[i] > *rho && h[i] < *r_max)
            }
            FamilySpec::Gaussians { .. } => true,
            FamilySpec::Simplices { mu, .. } => {
                let chart = self.simplex_chart.as_ref().unwrap();
                chart.contains(h) && simplex_ok(h, chart.dim(), *mu)
            }
        }
    }

    /// Whether `h` is covered by some chart of the atlas. Only simplex
    /// families have more than one chart: any valid simplex with edges
    /// shorter than μ qualifies.
    pub fn in_atlas(&self, h: &[f64]) -> bool {
        match &self.spec {
            FamilySpec::Simplices { mu, .. } => {
                let n = self.simplex_chart.as_ref().unwrap().dim();
                h.len() == self.chart_dim() && h.iter().all(|x| x.is_finite()) && simplex_ok(h, n, *mu)
            }
            _ => self.in_chart(h),
        }
    }

    fn check(&self, x: &ModelPoint) -> Result<()> {
        if x.family != self.tag() {
            return Err(Error::DomainMismatch(format!("{:?} point for a {:?} family", x.family, self.tag())));
        }
        if !self.in_chart(&x.coords) {
            return Err(Error::OutsideDomain(format!("coordinates {:?} outside the chart image", x.coords)));
        }
        Ok(())
    }

    /// φ⁻¹.
    pub fn embed(&self, x: &ModelPoint) -> Result<FunctionRep> {
        self.check(x)?;
        self.embed_coords(&x.coords)
    }

    /// φ⁻¹ on raw coordinates, requiring only that the function is well defined.
    pub(crate) fn embed_coords(&self, h: &[f64]) -> Result<FunctionRep> {
        if h.len() != self.chart_dim() {
            return Err(invalid("coordinate vector of the wrong length"));
        }
        match &self.spec {
            FamilySpec::Intervals { .. } => FunctionRep::interval(h[0], h[1]),
            FamilySpec::Balls { dim, .. } => FunctionRep::ball(h[..*dim].to_vec(), h[*dim]),
            FamilySpec::BallsIntensity { dim, .. } => {
                FunctionRep::ball_with_intensity(h[..*dim].to_vec(), h[*dim], h[dim + 1])
            }
            FamilySpec::Gaussians { .. } => FunctionRep::gaussian(h.to_vec()),
            FamilySpec::Simplices { .. } => {
                let n = self.simplex_chart.as_ref().unwrap().dim();
                FunctionRep::simplex(h.chunks(n).map(|c| c.to_vec()).collect())
            }
        }
    }

    /// φ: recovers chart coordinates from an embedded family member.
    pub fn chart_coords(&self, f: &FunctionRep) -> Result<ModelPoint> {
        let not_member = || Error::NotInFamily(format!("{:?} function for a {:?} family", f.domain(), self.tag()));
        let coords = match (&self.spec, f) {
            (FamilySpec::Intervals { .. }, FunctionRep::IntervalIndicator { a, b, intensity }) if *intensity == 1.0 => {
                vec![*a, *b]
            }
            (FamilySpec::Balls { dim, .. }, FunctionRep::BallIndicator { centre, radius, intensity })
                if *intensity == 1.0 && centre.len() == *dim =>
            {
                let mut h = centre.clone();
                h.push(*radius);
                h
            }
            (FamilySpec::BallsIntensity { dim, .. }, FunctionRep::BallIndicator { centre, radius, intensity })
                if centre.len() == *dim =>
            {
                let mut h = centre.clone();
                h.extend([*radius, *intensity]);
                h
            }
            (FamilySpec::Gaussians { dim, .. }, FunctionRep::GaussianBump { centre }) if centre.len() == *dim => {
                centre.clone()
            }
            (FamilySpec::Simplices { .. }, FunctionRep::SimplexIndicator { simplex, intensity }) if *intensity == 1.0 => {
                self.simplex_chart.as_ref().unwrap().coords_of(simplex).ok_or_else(not_member)?
            }
            _ => return Err(not_member()),
        };
        let x = ModelPoint { family: self.tag(), coords };
        self.check(&x).map_err(|_| not_member())?;
        Ok(x)
    }

    /// ‖φ⁻¹(x) − φ⁻¹(y)‖_{L^p}.
    pub fn ambient_distance(&self, x: &ModelPoint, y: &ModelPoint, p: f64) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        self.coords_distance(&x.coords, &y.coords, p)
    }

    pub(crate) fn coords_distance(&self, h1: &[f64], h2: &[f64], p: f64) -> Result<f64> {
        if self.tag() == FamilyTag::Intervals && p.is_finite() && p >= 1.0 {
            // |[a1,b1] △ [a2,b2]| without building functions.
            let inter = (h1[1].min(h2[1]) - h1[0].max(h2[0])).max(0.0);
            let sd = (h1[1] - h1[0]) + (h2[1] - h2[0]) - 2.0 * inter;
            return Ok(sd.max(0.0).powf(1.0 / p));
        }
        lp_distance(&self.embed_coords(h1)?, &self.embed_coords(h2)?, p)
    }

    /// Ambient distance in the family's own exponent.
    pub fn distance(&self, h1: &[f64], h2: &[f64]) -> Result<f64> {
        self.coords_distance(h1, h2, self.p())
    }

    pub fn holder_data(&self) -> HolderData {
        *self.holder.get_or_init(|| self.compute_holder())
    }

    fn compute_holder(&self) -> HolderData {
        let alpha = self.alpha();
        if let FamilySpec::Intervals { epsilon } = self.spec {
            // ‖Δχ‖₁ <= |Δh|₁ <= √2 |Δh|, and ε |Δh| <= ε |Δh|₁ <= ‖Δχ‖₁ on K.
            return HolderData {
                alpha,
                ell: epsilon,
                ell_holder: std::f64::consts::FRAC_1_SQRT_2,
                ell_chart: epsilon,
                source: ConstantSource::Analytic,
            };
        }
        let expensive = self.tag() == FamilyTag::Simplices && self.chart_dim() > 6;
        let count = if expensive { 48 } else { 2000 };
        let diam = self.compact.box_diameter();
        let opts = PairOptions { near_fraction: 0.5, near_min: 1e-4 * diam, near_max: 0.1 * diam };
        let pairs = sample_pairs(&self.compact, count, CALIBRATION_SEED, opts)
            .expect("K admits pairs by construction");
        let ratios: Vec<(f64, f64)> = pairs
            .par_iter()
            .filter_map(|pp| {
                let dx = self.distance(&pp.x, &pp.y).ok()?;
                let dh = euclid(&pp.x, &pp.y);
                (dx > 0.0 && dh > 0.0).then(|| (dh.powf(alpha) / dx, dx / dh))
            })
            .collect();
        let inf_h = ratios.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let inf_l = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let ell_holder = (0.5 * inf_h).min(1.0);
        let ell_chart = (0.5 * inf_l).min(1.0);
        HolderData { alpha, ell: ell_holder.min(ell_chart), ell_holder, ell_chart, source: ConstantSource::Estimated }
    }

    /// δ_{K,M}.
    pub fn delta_km(&self) -> f64 {
        self.compact.delta
    }

    pub fn sample_compact(&self, count: usize, seed: u64) -> Result<Vec<ModelPoint>> {
        Ok(sample_compact(&self.compact, count, seed)?
            .into_iter()
            .map(|coords| ModelPoint { family: self.tag(), coords })
            .collect())
    }
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn centre_norm(h: &[f64], n: usize) -> f64 {
    h[..n].iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn simplex_ok(h: &[f64], n: usize, mu: f64) -> bool {
    let v: Vec<&[f64]> = h.chunks(n).collect();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if euclid(v[i], v[j]) >= mu {
                return false;
            }
        }
    }
    SimplexParams::new(v.iter().map(|c| c.to_vec()).collect()).is_ok()
}

/// `z ↦ 2 exp(−|z − a|²) ⟨z − a, h⟩`, the derivative of `a ↦ G_a` in direction h.
pub fn gaussian_chart_derivative(a: &[f64], h: &[f64]) -> Result<FunctionRep> {
    if a.is_empty() || h.len() != a.len() {
        return Err(invalid("direction must be a nonzero-dimensional vector matching the centre"));
    }
    if h.iter().all(|x| *x == 0.0) {
        return Ok(FunctionRep::zero(Domain::Euclidean(a.len())));
    }
    let f = FunctionRep::GaussianDirectional { centre: a.to_vec(), direction: h.to_vec() };
    f.validate()?;
    Ok(f)
}
