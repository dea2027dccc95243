//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line;
//! run with `cargo test -p chartrecon --test acceptance -- --nocapture --test-threads=1`.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use chartrecon::forward::{chart_differential, chart_differential_fallback, ForwardOp};
use chartrecon::funcspace::{lp_norm, Weight};
use chartrecon::geometry::{
    ball_symmdiff_exact, ball_symmdiff_montecarlo, bilip_certify, simplex_lipschitz_constant, simplex_symmdiff,
    simplex_symmdiff_montecarlo, BallParams, SimplexParams,
};
use chartrecon::manifolds::{FamilySpec, ManifoldFamily};
use chartrecon::measurement::{measure_point, measured_jacobian};
use chartrecon::reconstruct::{
    build_lattice, rate_fit, ConstantsConfig, DataSource, ForwardModel, LatticeOptions, LatticeTable, Pipeline,
    ReconstructConfig, ReconstructionReport, SolverConfig, Termination,
};
use chartrecon::stabilitylab::{
    counterexample_sin, counterexample_weight, deficit_scan, empirical_stability, sampled_threshold_inputs,
    StabilityOptions, YNorm,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn uniform_in_ball(rng: &mut impl Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..radius)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() < radius * radius {
            return v;
        }
    }
}

#[test]
fn c01_exact_and_monte_carlo_volumes_agree() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let per_n = 200;
    for n in 1..=3 {
        for i in 0..per_n {
            let b1 = BallParams::new(uniform_in_ball(&mut rng, n, 1.0), rng.gen_range(0.3..1.5)).unwrap();
            let b2 = BallParams::new(uniform_in_ball(&mut rng, n, 1.0), rng.gen_range(0.3..1.5)).unwrap();
            let exact = ball_symmdiff_exact(&b1, &b2).unwrap();
            let mc = ball_symmdiff_montecarlo(&b1, &b2, 1_000_000, 1000 * n as u64 + i).unwrap();
            let z = (mc.estimate - exact).abs() / mc.stderr.max(f64::MIN_POSITIVE);
            worst = worst.max(z);
            if !mc.agrees_with(exact, 4.0) {
                failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures == 0 && elapsed < Duration::from_secs(120);
    verdict(
        1,
        "exact vs Monte Carlo ball symmetric differences",
        pass,
        format!("{} pairs, {failures} outside 4 stderr, worst {worst:.2} stderr, {elapsed:.1?}", 3 * per_n),
    );
}

#[test]
fn c02_ball_certifier_has_no_failures() {
    let (a_max, rho, r_max) = (1.0, 0.5, 1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut failures = Vec::new();
    for n in 1..=3 {
        for _ in 0..500 {
            let mut draw = || {
                BallParams::new(uniform_in_ball(&mut rng, n, a_max), rng.gen_range(rho..r_max)).unwrap()
            };
            let (b1, b2) = (draw(), draw());
            let r = bilip_certify(&b1, &b2, a_max, rho, r_max).unwrap();
            let inside = r.ratio.map_or(true, |q| r.lower_constant <= q && q <= r.upper_constant);
            if !r.pass || !inside {
                failures.push((n, r.case));
            }
        }
    }
    verdict(2, "ball bi-Lipschitz certification", failures.is_empty(), format!("1500 pairs, failures {failures:?}"));
}

fn vertex_norm(v: &[Vec<f64>], w: &[Vec<f64>]) -> f64 {
    v.iter()
        .zip(w)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn max_edge(v: &[Vec<f64>]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            m = m.max(vertex_norm(&v[i..=i], &v[j..=j]));
        }
    }
    m
}

/// A random simplex and a perturbation with every vertex moved by less than
/// a third of the shortest edge; μ bounds the edges of both.
fn perturbed_simplex(rng: &mut impl Rng, n: usize) -> (SimplexParams, SimplexParams, f64, f64) {
    loop {
        let v: Vec<Vec<f64>> = (0..=n).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let Ok(s) = SimplexParams::new(v.clone()) else { continue };
        if s.volume() < 1e-3 {
            continue;
        }
        let r_t = s.min_edge() / 3.0;
        let size = r_t * rng.gen_range(0.01..0.99);
        let w: Vec<Vec<f64>> = v
            .iter()
            .map(|p| {
                let d = uniform_in_ball(rng, n, 1.0);
                let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                let scale = size * rng.gen_range(0.0..1.0f64).max(0.5);
                p.iter().zip(&d).map(|(x, e)| x + scale * e / norm).collect()
            })
            .collect();
        let Ok(t) = SimplexParams::new(w.clone()) else { continue };
        let mu = max_edge(&v).max(max_edge(&w)) * (1.0 + 1e-9);
        return (s, t, vertex_norm(&v, &w), mu);
    }
}

#[test]
fn c03_simplex_lipschitz_bound_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (s, t, delta, mu) = perturbed_simplex(&mut rng, 2);
        let bound = simplex_lipschitz_constant(2, mu) * delta;
        let sd = simplex_symmdiff(&s, &t).unwrap();
        worst = worst.max(sd / bound);
        if sd > bound {
            violations += 1;
        }
    }
    for i in 0..100 {
        let (s, t, delta, mu) = perturbed_simplex(&mut rng, 3);
        let bound = simplex_lipschitz_constant(3, mu) * delta;
        let mc = simplex_symmdiff_montecarlo(&s, &t, 200_000, 3000 + i).unwrap();
        worst = worst.max(mc.estimate / bound);
        if mc.estimate > bound + 4.0 * mc.stderr {
            violations += 1;
        }
    }
    verdict(
        3,
        "simplex Lipschitz bound",
        violations == 0,
        format!("1000 triangles, 100 tetrahedra, {violations} violations, largest ratio to bound {worst:.3}"),
    );
}

#[test]
fn c04_holder_exponents_are_recovered() {
    let start = Instant::now();
    let opts = |q: f64| StabilityOptions { pairs: 10_000, seed: 404, y_norm: YNorm::Lp { q }, ..Default::default() };
    let ball = |p: f64| FamilySpec::Balls { dim: 2, p, a_max: 1.0, rho: 0.5, r_max: 1.5, margin: 0.1 };
    let cases = [
        ("balls p=1", ball(1.0), ForwardOp::Identity, 1.0, 1.0),
        ("balls p=2", ball(2.0), ForwardOp::Identity, 2.0, 0.5),
        ("balls p=4", ball(4.0), ForwardOp::Identity, 4.0, 0.25),
        ("gaussians p=2", FamilySpec::Gaussians { dim: 2, p: 2.0, half_width: 1.0 }, ForwardOp::Identity, 2.0, 1.0),
        ("gaussians p=1", FamilySpec::Gaussians { dim: 1, p: 1.0, half_width: 1.0 }, ForwardOp::Identity, 1.0, 1.0),
        ("intervals", FamilySpec::Intervals { epsilon: 0.1 }, ForwardOp::Integration, 1.0, 1.0),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, spec, op, q, alpha) in cases {
        let fam = ManifoldFamily::new(spec).unwrap();
        let (r, _) = empirical_stability(&fam, op, &opts(q)).unwrap();
        let a = r.alpha_hat.unwrap();
        let ok = (a - alpha).abs() <= 0.05 * alpha;
        pass &= ok;
        details.push(format!("{name} {a:.4} vs {alpha}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    verdict(4, "Hölder exponent regressions", pass, format!("{}; {elapsed:.1?}", details.join(", ")));
}

#[test]
fn c05_projection_deficit_reaches_the_threshold() {
    let fam = ManifoldFamily::new(FamilySpec::Intervals { epsilon: 0.1 }).unwrap();
    let (c, delta) = sampled_threshold_inputs(&fam, ForwardOp::Integration, 10_000, 0).unwrap();
    let grid = [4, 8, 16, 32, 64, 128];
    let scan = deficit_scan(&fam, ForwardOp::Integration, c, delta, &grid, 1000, 0).unwrap();
    let monotone = scan.curve.windows(2).all(|w| w[1].1 <= w[0].1);
    let curve: Vec<String> = scan.curve.iter().map(|(n, d)| format!("{n}:{d:.2e}")).collect();
    verdict(
        5,
        "projection deficit scan",
        monotone && scan.n_star.is_some(),
        format!(
            "C={c:.3}, δ={delta:.3}, threshold {:.3e}, N*={:?}, curve [{}]",
            scan.threshold,
            scan.n_star,
            curve.join(" ")
        ),
    );
}

/// Central differences of `h ↦ Q_N F(φ⁻¹(h))`.
fn fd_jacobian(op: ForwardOp, fam: &ManifoldFamily, h: &[f64], n: usize) -> DMatrix<f64> {
    let step = 1e-6;
    let cols: Vec<Vec<f64>> = (0..h.len())
        .map(|j| {
            let mut hp = h.to_vec();
            let mut hm = h.to_vec();
            hp[j] += step;
            hm[j] -= step;
            let (mp, mm) = (measure_point(op, fam, &hp, n).unwrap(), measure_point(op, fam, &hm, n).unwrap());
            mp.coeffs.iter().zip(&mm.coeffs).map(|(a, b)| (a - b) / (2.0 * step)).collect()
        })
        .collect();
    DMatrix::from_fn(cols[0].len(), h.len(), |i, j| cols[j][i])
}

#[test]
fn c06_jacobians_match_finite_differences() {
    let intervals = ManifoldFamily::new(FamilySpec::Intervals { epsilon: 0.1 }).unwrap();
    let triangles = ManifoldFamily::new(FamilySpec::Simplices {
        mu: 0.9,
        reference: vec![vec![0.3, 0.3], vec![0.7, 0.35], vec![0.4, 0.7]],
    })
    .unwrap();
    let cases = [
        ("intervals/integration", &intervals, ForwardOp::Integration),
        ("intervals/identity", &intervals, ForwardOp::Identity),
        ("intervals/multiplication", &intervals, ForwardOp::Multiplication { weight: Weight::PeriodicExpInverse }),
        ("triangles/identity", &triangles, ForwardOp::Identity),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, fam, op) in cases {
        let mut worst: f64 = 0.0;
        for x in fam.sample_compact(50, 606).unwrap() {
            let j = measured_jacobian(op, fam, &x.coords, 16).unwrap();
            let fd = fd_jacobian(op, fam, &x.coords, 16);
            worst = worst.max((&j - &fd).norm() / j.norm());
        }
        pass &= worst <= 1e-5;
        details.push(format!("{name} {worst:.1e}"));
    }
    let mut worst_l1: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for x in intervals.sample_compact(50, 607).unwrap() {
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = [th.cos(), th.sin()];
        let exact = chart_differential(ForwardOp::Integration, &intervals, &x.coords, &v).unwrap();
        let fd = chart_differential_fallback(ForwardOp::Integration, &intervals, &x.coords, &v).unwrap();
        worst_l1 = worst_l1.max(lp_norm(&exact.minus(&fd).unwrap(), 1.0).unwrap() / lp_norm(&exact, 1.0).unwrap());
    }
    pass &= worst_l1 <= 1e-5;
    details.push(format!("interval differential vs fallback {worst_l1:.1e}"));
    verdict(6, "Jacobians and differentials", pass, details.join(", "));
}

fn interval_config() -> ReconstructConfig {
    ReconstructConfig {
        family: FamilySpec::Intervals { epsilon: 0.1 },
        op: ForwardOp::Integration,
        bandwidth: 16,
        constants: ConstantsConfig::default(),
        solver: SolverConfig::default(),
        seed: 7,
    }
}

struct EndToEnd {
    reports: Vec<ReconstructionReport>,
    chart_errors: Vec<Vec<f64>>,
    ambient_errors: Vec<Vec<f64>>,
    elapsed: Duration,
}

/// Twenty random instances with ε = 0.1, N = 16, offline table included in the timing.
fn end_to_end() -> &'static EndToEnd {
    static RUN: OnceLock<EndToEnd> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let p = Pipeline::prepare(interval_config()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(707);
        let mut out = EndToEnd { reports: vec![], chart_errors: vec![], ambient_errors: vec![], elapsed: Duration::ZERO };
        while out.reports.len() < 20 {
            let (a, b) = (rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
            if b - a < 0.2 {
                continue;
            }
            let (r, traj) = p.solve(&DataSource::Synthetic { truth: vec![a, b], noise: 0.0 }).unwrap();
            out.chart_errors.push(traj.chart_errors.unwrap());
            out.ambient_errors.push(traj.ambient_errors.unwrap());
            out.reports.push(r);
        }
        out.elapsed = start.elapsed();
        out
    })
}

#[test]
fn c07_end_to_end_reconstruction() {
    let run = end_to_end();
    let good = run
        .reports
        .iter()
        .filter(|r| {
            r.x0_ambient_error.unwrap() < r.x0_bound
                && r.termination == Termination::Converged
                && r.final_chart_error.unwrap() <= 1e-6
        })
        .count();
    let worst_x0 = run.reports.iter().map(|r| r.x0_ambient_error.unwrap()).fold(0.0, f64::max);
    let worst_final = run.reports.iter().map(|r| r.final_chart_error.unwrap()).fold(0.0, f64::max);
    let c = &run.reports[0].constants;
    verdict(
        7,
        "end-to-end reconstruction",
        good == 20 && run.elapsed < Duration::from_secs(600),
        format!(
            "{good}/20, worst x0 error {worst_x0:.3e} vs bound {:.3e}, worst final chart error {worst_final:.1e}, {} lattice points, {:.1?}",
            run.reports[0].x0_bound,
            run.reports[0].lattice_points,
            run.elapsed
        ) + &format!(", C={:.3}, ρ={}", c.c, c.rho),
    );
}

#[test]
fn c08_geometric_rate_envelope() {
    let run = end_to_end();
    let mut pass = true;
    let mut worst_c: f64 = 0.0;
    for (r, (chart, ambient)) in run.reports.iter().zip(run.chart_errors.iter().zip(&run.ambient_errors)) {
        let fit = rate_fit(chart, Some(ambient), 1.0, r.constants.ell, None).unwrap();
        pass &= fit.c_hat < 1.0 && fit.bound_satisfied;
        pass &= r.rate == Some(fit);
        worst_c = worst_c.max(fit.c_hat);
    }
    let c_true: f64 = 0.73;
    let synthetic: Vec<f64> = (0..50).map(|k| 0.4 * c_true.powi(k)).collect();
    let fit = rate_fit(&synthetic, None, 1.0, 0.1, None).unwrap();
    let recovered = (fit.c_hat - c_true).abs();
    pass &= recovered <= 1e-6;
    verdict(
        8,
        "convergence rate envelope",
        pass,
        format!("20 trajectories, largest ĉ {worst_c:.4}; synthetic c recovered to {recovered:.1e}"),
    );
}

#[test]
fn c09_counterexamples() {
    let ks: Vec<u64> = (1..=1000).collect();
    let worst = ks
        .iter()
        .zip(counterexample_sin(&ks).unwrap())
        .map(|(k, v)| {
            let expected = 1.0 / (*k as f64 * std::f64::consts::PI);
            (v - expected).abs() / expected
        })
        .fold(0.0, f64::max);
    let mut pass = worst <= 1e-14;
    let ts = [0.2, 0.1, 0.05, 0.025];
    let mut ratios = Vec::new();
    for alpha in [0.5, 1.0] {
        let rows = counterexample_weight(&ts, alpha).unwrap();
        pass &= rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
        pass &= rows.iter().all(|w| w.ratio <= w.bound);
        ratios.push(format!("α={alpha}: {:.2e}", rows.last().unwrap().ratio));
    }
    verdict(
        9,
        "instability witnesses",
        pass,
        format!("sine relative error {worst:.1e}; weight ratios at t=0.025 {}", ratios.join(", ")),
    );
}

fn table_bytes(table: &LatticeTable) -> Vec<u8> {
    let mut out = Vec::new();
    table.write_to(&mut out).unwrap();
    out
}

#[test]
fn c10_determinism_and_persistence() {
    let solve = || {
        let p = Pipeline::prepare(interval_config()).unwrap();
        let (r, traj) = p.solve(&DataSource::Synthetic { truth: vec![0.23, 0.58], noise: 0.0 }).unwrap();
        (serde_json::to_vec_pretty(&r).unwrap(), traj.to_csv(), table_bytes(&p.table))
    };
    let (a, b) = (solve(), solve());
    let reports_equal = a == b;

    let table = LatticeTable::read_from(a.2.as_slice()).unwrap();
    let round_trip = table_bytes(&table) == a.2 && table.len() > 0;

    let fam = ManifoldFamily::new(FamilySpec::Intervals { epsilon: 0.1 }).unwrap();
    let build = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let model = ForwardModel::new(ForwardOp::Integration, &fam, 16);
            table_bytes(&build_lattice(&model, 0.01, LatticeOptions::default()).unwrap())
        })
    };
    let workers = build(1) == build(4);
    verdict(
        10,
        "determinism and persistence",
        reports_equal && round_trip && workers,
        format!("identical reports {reports_equal}, table round trip {round_trip}, 1 vs 4 workers {workers}"),
    );
}
