//! Composite Gauss–Legendre quadrature with panel splitting at known kinks.

use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

const DEFAULT_DEGREE: usize = 10;

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let gl = GaussLegendre::new(DEFAULT_DEGREE).expect("degree >= 2");
        let (nodes, weights) = gl.as_node_weight_pairs().iter().copied().unzip();
        Rule { nodes, weights }
    })
}

/// Integrates `f` over `[a, b]` with a single Gauss–Legendre panel.
pub fn gauss_panel<F: FnMut(f64) -> f64>(a: f64, b: f64, f: &mut F) -> f64 {
    let r = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in r.nodes.iter().zip(&r.weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Composite rule over `[lo, hi]`.
///
/// `breakpoints` are points where the integrand may have kinks or jumps;
/// every panel boundary includes them. Panels are additionally split so no
/// panel is wider than `max_width`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    max_width: f64,
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let knots = panel_knots(lo, hi, breakpoints);
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let pieces = ((len / max_width).ceil() as usize).max(1);
        let step = len / pieces as f64;
        for i in 0..pieces {
            let pa = a + step * i as f64;
            let pb = if i + 1 == pieces { b } else { pa + step };
            total += gauss_panel(pa, pb, &mut f);
        }
    }
    total
}

/// Sorted, de-duplicated knots `lo = k_0 < ... < k_m = hi` containing every
/// breakpoint strictly inside `(lo, hi)`.
pub fn panel_knots(lo: f64, hi: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut knots: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|t| t.is_finite() && *t > lo && *t < hi)
        .collect();
    knots.push(lo);
    knots.push(hi);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
}

/// `∫_lo^hi |f|^p` by composite Gauss–Legendre, with sign changes of `f`
/// located by sampling and bisection and added as panel boundaries so the
/// kink of `|f|` never falls inside a panel.
pub fn integrate_abs_pow<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    max_width: f64,
    p: f64,
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let knots = panel_knots(lo, hi, breakpoints);
    let mut all = knots.clone();
    const PROBES: usize = 8;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = (((b - a) / max_width).ceil() as usize).max(1) * PROBES;
        let step = (b - a) / pieces as f64;
        // Probe just inside the panel so jumps at the ends do not register.
        let inset = 1e-12 * (b - a);
        let mut x0 = a + inset;
        let mut f0 = f(x0);
        for i in 1..=pieces {
            let x1 = if i == pieces { b - inset } else { a + step * i as f64 };
            let f1 = f(x1);
            if f0 * f1 < 0.0 {
                all.push(bisect(&f, x0, x1, f0));
            }
            x0 = x1;
            f0 = f1;
        }
    }
    integrate(|x| f(x).abs().powf(p), lo, hi, &all, max_width)
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, fa: f64) -> f64 {
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
