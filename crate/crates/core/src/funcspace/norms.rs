use num_complex::Complex64;

use super::gauss;
use super::piecewise::turn;
use super::{Domain, FunctionRep};
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    ball_volume, intersection_volume, simplex_symmdiff_montecarlo, triangle_intersection_area,
    BallParams, SimplexParams, DEFAULT_SIMPLEX_MC_SAMPLES,
};
use crate::quadrature::{integrate, integrate_abs_pow};

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("L^p needs p >= 1, got {p}")));
    }
    Ok(())
}

/// ‖f‖_{L^p}, exact for closed-form kinds.
pub fn lp_norm(f: &FunctionRep, p: f64) -> Result<f64> {
    check_p(p)?;
    f.validate()?;
    if f.domain() == Domain::UnitInterval {
        if let Some(pl) = f.to_piecewise() {
            return Ok(pl.lp_norm(p));
        }
        if p.is_infinite() {
            return Err(Error::Unsupported("sup norm of a function on [0,1] without a piecewise form".into()));
        }
        let mut bps = Vec::new();
        breakpoints_unit(f, &mut bps);
        let v = integrate_abs_pow(|t| f.eval_unchecked(&[t]), 0.0, 1.0, &bps, 1.0 / 64.0, p);
        return Ok(v.powf(1.0 / p));
    }
    let mut leaves = Vec::new();
    flatten(f, 1.0, &mut leaves);
    leaves.retain(|(c, _)| *c != 0.0);
    let n = f.domain().dim();
    if leaves.is_empty() {
        return Ok(0.0);
    }
    if let Some(sets) = indicator_sets(&leaves) {
        if sets.len() <= 2 || n == 1 {
            return indicator_norm(&sets, p);
        }
    }
    if let Some(terms) = gauss::collect(&leaves) {
        if p.is_infinite() {
            return gauss::sup(&terms);
        }
        return Ok(gauss::abs_pow_integral(&terms, n, p)?.powf(1.0 / p));
    }
    if n == 1 && p.is_finite() {
        let (lo, hi) = support_1d(f).ok_or_else(|| Error::Unsupported("unbounded support".into()))?;
        let mut bps = Vec::new();
        breakpoints_1d(f, &mut bps);
        let v = integrate_abs_pow(|t| f.eval_unchecked(&[t]), lo, hi, &bps, 1.0 / 64.0, p);
        return Ok(v.powf(1.0 / p));
    }
    Err(Error::Unsupported(format!("L^{p} norm of this combination on {:?}", f.domain())))
}

/// ‖f - g‖_{L^p}.
pub fn lp_distance(f: &FunctionRep, g: &FunctionRep, p: f64) -> Result<f64> {
    check_p(p)?;
    if f.domain() != g.domain() {
        return Err(Error::DomainMismatch(format!("{:?} vs {:?}", f.domain(), g.domain())));
    }
    if f == g {
        return Ok(0.0);
    }
    lp_norm(&f.minus(g)?, p)
}

fn flatten<'a>(f: &'a FunctionRep, c: f64, out: &mut Vec<(f64, &'a FunctionRep)>) {
    match f {
        FunctionRep::Combination { terms, .. } => {
            for (ci, t) in terms {
                flatten(t, c * ci, out);
            }
        }
        _ => out.push((c, f)),
    }
}

enum Set {
    Ball(BallParams),
    Simplex(SimplexParams),
}

impl Set {
    fn volume(&self) -> f64 {
        match self {
            Set::Ball(b) => ball_volume(b.dim(), b.radius),
            Set::Simplex(s) => s.volume(),
        }
    }

    fn as_interval(&self) -> Option<(f64, f64)> {
        match self {
            Set::Ball(b) if b.dim() == 1 => Some((b.centre[0] - b.radius, b.centre[0] + b.radius)),
            Set::Simplex(s) if s.dim() == 1 => Some((s.vertices()[0][0], s.vertices()[1][0])),
            _ => None,
        }
    }
}

fn indicator_sets(leaves: &[(f64, &FunctionRep)]) -> Option<Vec<(f64, Set)>> {
    leaves
        .iter()
        .map(|(c, f)| match f {
            FunctionRep::BallIndicator { centre, radius, intensity } => Some((
                c * intensity,
                Set::Ball(BallParams { centre: centre.clone(), radius: *radius }),
            )),
            FunctionRep::SimplexIndicator { simplex, intensity } => {
                Some((c * intensity, Set::Simplex(simplex.clone())))
            }
            _ => None,
        })
        .collect()
}

fn intersection(a: &Set, b: &Set) -> Result<f64> {
    if let (Some((a0, a1)), Some((b0, b1))) = (a.as_interval(), b.as_interval()) {
        return Ok((a1.min(b1) - a0.max(b0)).max(0.0));
    }
    match (a, b) {
        (Set::Ball(x), Set::Ball(y)) => intersection_volume(x, y),
        (Set::Simplex(x), Set::Simplex(y)) if x.dim() == 2 => triangle_intersection_area(x, y),
        (Set::Simplex(x), Set::Simplex(y)) => {
            if x == y {
                return Ok(x.volume());
            }
            let sd = simplex_symmdiff_montecarlo(x, y, DEFAULT_SIMPLEX_MC_SAMPLES, 0)?.estimate;
            Ok(((x.volume() + y.volume() - sd) / 2.0).max(0.0))
        }
        _ => Err(Error::Unsupported("intersection of a ball and a simplex".into())),
    }
}

/// Norm of `Σ c_i χ_{S_i}` for at most two sets, or any number of intervals.
fn indicator_norm(sets: &[(f64, Set)], p: f64) -> Result<f64> {
    // (coefficient, measure) over the disjoint regions of the union.
    let regions: Vec<(f64, f64)> = match sets {
        [(c, s)] => vec![(*c, s.volume())],
        [(c1, s1), (c2, s2)] => {
            let inter = intersection(s1, s2)?;
            vec![
                (*c1, (s1.volume() - inter).max(0.0)),
                (*c2, (s2.volume() - inter).max(0.0)),
                (c1 + c2, inter),
            ]
        }
        _ => interval_regions(sets),
    };
    if p.is_infinite() {
        let scale = regions.iter().map(|r| r.1).fold(0.0, f64::max);
        return Ok(regions
            .iter()
            .filter(|(_, m)| *m > 1e-14 * scale)
            .map(|(c, _)| c.abs())
            .fold(0.0, f64::max));
    }
    let total: f64 = regions.iter().map(|(c, m)| c.abs().powf(p) * m).sum();
    Ok(total.powf(1.0 / p))
}

fn interval_regions(sets: &[(f64, Set)]) -> Vec<(f64, f64)> {
    let ivs: Vec<(f64, (f64, f64))> = sets
        .iter()
        .map(|(c, s)| (*c, s.as_interval().expect("one-dimensional sets")))
        .collect();
    let mut knots: Vec<f64> = ivs.iter().flat_map(|(_, (a, b))| [*a, *b]).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let c: f64 = ivs.iter().filter(|(_, (a, b))| *a <= mid && mid <= *b).map(|(c, _)| c).sum();
            (c, w[1] - w[0])
        })
        .collect()
}

fn support_1d(f: &FunctionRep) -> Option<(f64, f64)> {
    match f {
        FunctionRep::BallIndicator { centre, radius, .. } => Some((centre[0] - radius, centre[0] + radius)),
        FunctionRep::SimplexIndicator { simplex, .. } => {
            Some((simplex.vertices()[0][0], simplex.vertices()[1][0]))
        }
        FunctionRep::GaussianBump { centre } | FunctionRep::GaussianDirectional { centre, .. } => {
            Some((centre[0] - 8.0, centre[0] + 8.0))
        }
        FunctionRep::Modulated { inner, .. } => support_1d(inner),
        FunctionRep::Combination { terms, .. } => terms
            .iter()
            .filter_map(|(_, t)| support_1d(t))
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1))),
        _ => None,
    }
}

fn breakpoints_1d(f: &FunctionRep, out: &mut Vec<f64>) {
    match f {
        FunctionRep::BallIndicator { centre, radius, .. } => {
            out.extend([centre[0] - radius, centre[0] + radius])
        }
        FunctionRep::SimplexIndicator { simplex, .. } => {
            out.extend(simplex.vertices().iter().map(|v| v[0]))
        }
        FunctionRep::GaussianBump { centre } | FunctionRep::GaussianDirectional { centre, .. } => {
            out.push(centre[0])
        }
        FunctionRep::Modulated { weight, inner } => {
            breakpoints_1d(inner, out);
            if let Some((lo, hi)) = support_1d(inner) {
                out.extend(weight.breakpoints(lo, hi));
            }
        }
        FunctionRep::Combination { terms, .. } => {
            for (_, t) in terms {
                breakpoints_1d(t, out);
            }
        }
        _ => {}
    }
}

fn breakpoints_unit(f: &FunctionRep, out: &mut Vec<f64>) {
    match f {
        FunctionRep::IntervalIndicator { a, b, .. } => out.extend([*a, *b]),
        FunctionRep::PiecewiseLinear(pl) => out.extend_from_slice(pl.breakpoints()),
        FunctionRep::SampledGrid { values } => {
            let m = values.len() - 1;
            out.extend((0..=m).map(|j| j as f64 / m as f64));
        }
        FunctionRep::Modulated { inner, .. } => breakpoints_unit(inner, out),
        FunctionRep::Combination { terms, .. } => {
            for (_, t) in terms {
                breakpoints_unit(t, out);
            }
        }
        _ => {}
    }
}

fn check_fourier_input(f: &FunctionRep, k_max: i64) -> Result<()> {
    if k_max < 0 {
        return Err(invalid("maximal frequency must be nonnegative"));
    }
    if f.domain() != Domain::UnitInterval {
        return Err(Error::DomainMismatch("Fourier coefficients are taken on [0, 1]".into()));
    }
    f.validate()
}

/// `c_k = ∫_0^1 f(t) e^{-2πikt} dt` for `k = -K..=K`, entry `k + K`.
pub fn fourier_coefficients(f: &FunctionRep, k_max: i64) -> Result<Vec<Complex64>> {
    check_fourier_input(f, k_max)?;
    match f.to_piecewise() {
        Some(pl) => {
            let mut out = vec![Complex64::new(0.0, 0.0); 2 * k_max as usize + 1];
            let ku = k_max as usize;
            out[ku] = pl.fourier_coefficient(0);
            for k in 1..=ku {
                let c = pl.fourier_coefficient(k as i64);
                out[ku + k] = c;
                out[ku - k] = c.conj();
            }
            Ok(out)
        }
        None => fourier_coefficients_quadrature(f, k_max),
    }
}

/// Composite Gauss–Legendre evaluation of the coefficients, panels split at
/// the representation's breakpoints and no wider than a quarter period.
pub fn fourier_coefficients_quadrature(f: &FunctionRep, k_max: i64) -> Result<Vec<Complex64>> {
    check_fourier_input(f, k_max)?;
    let mut bps = Vec::new();
    breakpoints_unit(f, &mut bps);
    let width = (1.0 / (4.0 * (k_max as f64 + 1.0))).min(1.0 / 64.0);
    let ku = k_max as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * ku + 1];
    for k in 0..=ku {
        let kf = k as f64;
        let re = integrate(|t| f.eval_unchecked(&[t]) * turn(kf * t).re, 0.0, 1.0, &bps, width);
        let im = integrate(|t| f.eval_unchecked(&[t]) * turn(kf * t).im, 0.0, 1.0, &bps, width);
        let c = Complex64::new(re, im);
        out[ku + k] = c;
        out[ku - k] = c.conj();
    }
    Ok(out)
}
