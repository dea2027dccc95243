//! Two-sided comparison of |B1 △ B2| with |Δa| + |Δr| for balls whose
//! centres lie in the closed ball of radius A and radii lie in [ρ, R].
//!
//! The four cases follow the standard proof of the estimate; each carries
//! its own pair of constants so a failure pinpoints the broken branch.

use serde::{Deserialize, Serialize};

use super::ball::{ball_symmdiff_exact, unit_ball_volume, BallParams};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundCase {
    /// |Δa| >= r1 + r2, tangency included.
    Disjoint,
    /// |Δa| < |Δr|.
    Nested,
    /// Overlapping with |Δa| > max(r1, r2).
    LensFar,
    /// Overlapping with |Δa| <= max(r1, r2).
    LensNear,
}

impl BoundCase {
    pub fn label(self) -> &'static str {
        match self {
            BoundCase::Disjoint => "disjoint",
            BoundCase::Nested => "nested",
            BoundCase::LensFar => "lens-far",
            BoundCase::LensNear => "lens-near",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub case: BoundCase,
    pub lower_constant: f64,
    pub upper_constant: f64,
    pub symmdiff: f64,
    /// |Δa| + |Δr|.
    pub param_distance: f64,
    /// symmdiff / param_distance; `None` for identical balls.
    pub ratio: Option<f64>,
    pub pass: bool,
    /// Constant c with |Δa| + |Δr| <= c·|(Δa, Δr)| for the norm the diameter
    /// is measured in. The sum norm is used throughout, so c = 1.
    pub norm_constant: f64,
    /// Diameter of the parameter box in the sum norm: 2A + (R - ρ).
    pub diam_k: f64,
}

pub fn bilip_certify(
    b1: &BallParams,
    b2: &BallParams,
    a_max: f64,
    rho: f64,
    r_max: f64,
) -> Result<BoundReport> {
    if !(a_max > 0.0 && rho > 0.0 && rho < r_max && r_max.is_finite()) {
        return Err(invalid("need A > 0 and 0 < ρ < R < ∞"));
    }
    let n = b1.dim();
    if b2.dim() != n {
        return Err(invalid("balls of different dimension"));
    }
    let slack = 1e-12;
    for b in [b1, b2] {
        let norm = b.centre.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > a_max * (1.0 + slack) || b.radius < rho * (1.0 - slack) || b.radius > r_max * (1.0 + slack) {
            return Err(invalid(format!(
                "ball (|a| = {norm}, r = {}) outside the box A = {a_max}, [ρ, R] = [{rho}, {r_max}]",
                b.radius
            )));
        }
    }

    let da = b1
        .centre
        .iter()
        .zip(&b2.centre)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let dr = (b1.radius - b2.radius).abs();
    let (r1, r2) = (b1.radius, b2.radius);
    let wn = unit_ball_volume(n);
    let wn1 = unit_ball_volume(n - 1);
    let nf = n as f64;
    let two_n1 = 2f64.powi(n as i32 - 1);
    let rho_n1 = rho.powi(n as i32 - 1);
    let big_n1 = r_max.powi(n as i32 - 1);
    let norm_constant = 1.0;
    let diam_k = 2.0 * a_max + (r_max - rho);

    let (case, lower, upper) = if da >= r1 + r2 {
        (
            BoundCase::Disjoint,
            wn * rho.powi(n as i32) / (norm_constant * diam_k),
            two_n1 * wn * big_n1,
        )
    } else if da < dr {
        (BoundCase::Nested, 0.5 * nf * wn * rho_n1, nf * wn * big_n1)
    } else if da > r1.max(r2) {
        (
            BoundCase::LensFar,
            wn * rho_n1 / (2.0 * two_n1),
            two_n1 * nf * wn * big_n1,
        )
    } else {
        (
            BoundCase::LensNear,
            wn1 * rho_n1 / (2.0 * two_n1),
            two_n1 * nf * wn * big_n1,
        )
    };

    let symmdiff = ball_symmdiff_exact(b1, b2)?;
    let param_distance = da + dr;
    let (ratio, pass) = if param_distance == 0.0 {
        (None, symmdiff == 0.0)
    } else {
        let q = symmdiff / param_distance;
        let tol = 1e-9;
        (Some(q), q >= lower * (1.0 - tol) && q <= upper * (1.0 + tol))
    };
    Ok(BoundReport {
        case,
        lower_constant: lower,
        upper_constant: upper,
        symmdiff,
        param_distance,
        ratio,
        pass,
        norm_constant,
        diam_k,
    })
}
