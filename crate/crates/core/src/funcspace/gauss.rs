//! L^p integrals of finite sums of Gaussian bumps and their directional
//! derivatives. When all centres lie on one line and all directions are
//! parallel to it, the integral factorises into a transverse Gaussian factor
//! and a one-dimensional integral.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_abs_pow};

use super::FunctionRep;

pub(super) struct GaussTerm {
    pub coef: f64,
    pub centre: Vec<f64>,
    pub direction: Option<Vec<f64>>,
}

/// Distance beyond which every term is below 1e-25 of its peak.
const TAIL: f64 = 8.0;

pub(super) fn collect(leaves: &[(f64, &FunctionRep)]) -> Option<Vec<GaussTerm>> {
    leaves
        .iter()
        .map(|(c, f)| match f {
            FunctionRep::GaussianBump { centre } => {
                Some(GaussTerm { coef: *c, centre: centre.clone(), direction: None })
            }
            FunctionRep::GaussianDirectional { centre, direction } => Some(GaussTerm {
                coef: *c,
                centre: centre.clone(),
                direction: Some(direction.clone()),
            }),
            _ => None,
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The common line `base + s u`, if there is one.
fn common_axis(terms: &[GaussTerm], n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let base = terms[0].centre.clone();
    let offsets: Vec<Vec<f64>> = terms
        .iter()
        .map(|t| t.centre.iter().zip(&base).map(|(c, b)| c - b).collect())
        .collect();
    let seed = offsets
        .iter()
        .find(|v| norm(v) > 0.0)
        .cloned()
        .or_else(|| {
            terms
                .iter()
                .filter_map(|t| t.direction.clone())
                .find(|h| norm(h) > 0.0)
        })
        .unwrap_or_else(|| {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        });
    let len = norm(&seed);
    let u: Vec<f64> = seed.iter().map(|x| x / len).collect();
    let on_axis = |v: &[f64]| {
        let s = dot(v, &u);
        let perp: f64 = v.iter().zip(&u).map(|(x, ui)| (x - s * ui).powi(2)).sum::<f64>().sqrt();
        perp <= 1e-12 * (1.0 + norm(v))
    };
    let ok = offsets.iter().all(|v| on_axis(v))
        && terms.iter().all(|t| t.direction.as_ref().map_or(true, |h| on_axis(h)));
    ok.then_some((base, u))
}

pub(super) fn abs_pow_integral(terms: &[GaussTerm], n: usize, p: f64) -> Result<f64> {
    if terms.is_empty() {
        return Ok(0.0);
    }
    if let Some((base, u)) = common_axis(terms, n) {
        // (position along the axis, coefficient, slope along the axis)
        let line: Vec<(f64, f64, Option<f64>)> = terms
            .iter()
            .map(|t| {
                let rel: Vec<f64> = t.centre.iter().zip(&base).map(|(c, b)| c - b).collect();
                (dot(&rel, &u), t.coef, t.direction.as_ref().map(|h| dot(h, &u)))
            })
            .collect();
        let g = |s: f64| -> f64 {
            line.iter()
                .map(|(si, c, beta)| {
                    let d = s - si;
                    let e = (-d * d).exp();
                    match beta {
                        None => c * e,
                        Some(b) => c * 2.0 * b * d * e,
                    }
                })
                .sum()
        };
        let lo = line.iter().map(|l| l.0).fold(f64::INFINITY, f64::min) - TAIL;
        let hi = line.iter().map(|l| l.0).fold(f64::NEG_INFINITY, f64::max) + TAIL;
        let bps: Vec<f64> = line.iter().map(|l| l.0).collect();
        let one_d = integrate_abs_pow(g, lo, hi, &bps, 0.25, p);
        let transverse = (std::f64::consts::PI / p).powf((n as f64 - 1.0) / 2.0);
        return Ok(transverse * one_d);
    }
    if n > 3 {
        return Err(Error::Unsupported(
            "non-collinear Gaussian sums are only integrated for n <= 3".into(),
        ));
    }
    let value = |z: &[f64]| -> f64 {
        terms
            .iter()
            .map(|t| {
                let rel: Vec<f64> = z.iter().zip(&t.centre).map(|(a, b)| a - b).collect();
                let e = (-dot(&rel, &rel)).exp();
                match &t.direction {
                    None => t.coef * e,
                    Some(h) => t.coef * 2.0 * dot(&rel, h) * e,
                }
            })
            .sum()
    };
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for t in terms {
        for i in 0..n {
            lo[i] = lo[i].min(t.centre[i] - TAIL);
            hi[i] = hi[i].max(t.centre[i] + TAIL);
        }
    }
    let width = if n == 3 { 1.0 } else { 0.5 };
    Ok(tensor(&value, &lo, &hi, width, p, &mut Vec::with_capacity(n)))
}

fn tensor(
    f: &dyn Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    width: f64,
    p: f64,
    prefix: &mut Vec<f64>,
) -> f64 {
    let d = prefix.len();
    if d == lo.len() {
        return f(prefix).abs().powf(p);
    }
    integrate(
        |x| {
            prefix.push(x);
            let v = tensor(f, lo, hi, width, p, prefix);
            prefix.pop();
            v
        },
        lo[d],
        hi[d],
        &[],
        width,
    )
}

/// Supremum of |f| for a single term; sums have no closed form.
pub(super) fn sup(terms: &[GaussTerm]) -> Result<f64> {
    match terms {
        [] => Ok(0.0),
        [t] => Ok(match &t.direction {
            None => t.coef.abs(),
            Some(h) => t.coef.abs() * 2.0f64.sqrt() * norm(h) * (-0.5f64).exp(),
        }),
        _ => Err(Error::Unsupported("sup norm of a Gaussian sum".into())),
    }
}
