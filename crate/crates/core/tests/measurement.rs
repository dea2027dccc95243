use chartrecon::forward::ForwardOp;
use chartrecon::funcspace::{FunctionRep, Weight};
use chartrecon::manifolds::{FamilySpec, ManifoldFamily};
use chartrecon::measurement::{
    measure_point, measured_jacobian, measurement_inner, project_fejer, projection_deficit,
};
use proptest::prelude::*;

mod common;
use common::simpson;

fn intervals() -> ManifoldFamily {
    ManifoldFamily::new(FamilySpec::Intervals { epsilon: 0.1 }).unwrap()
}

fn triangles() -> ManifoldFamily {
    ManifoldFamily::new(FamilySpec::Simplices {
        mu: 0.9,
        reference: vec![vec![0.3, 0.3], vec![0.7, 0.35], vec![0.4, 0.7]],
    })
    .unwrap()
}

fn fd_jacobian(op: ForwardOp, fam: &ManifoldFamily, h: &[f64], n: usize, step: f64) -> Vec<Vec<f64>> {
    (0..h.len())
        .map(|j| {
            let mut hp = h.to_vec();
            let mut hm = h.to_vec();
            hp[j] += step;
            hm[j] -= step;
            let p = measure_point(op, fam, &hp, n).unwrap();
            let m = measure_point(op, fam, &hm, n).unwrap();
            p.coeffs.iter().zip(&m.coeffs).map(|(a, b)| (a - b) / (2.0 * step)).collect()
        })
        .collect()
}

fn assert_jacobian_matches(op: ForwardOp, fam: &ManifoldFamily, n: usize, count: usize) {
    for x in fam.sample_compact(count, 11).unwrap() {
        let jac = measured_jacobian(op, fam, &x.coords, n).unwrap();
        let fd = fd_jacobian(op, fam, &x.coords, n, 1e-6);
        for (j, col) in fd.iter().enumerate() {
            let num: f64 = col.iter().enumerate().map(|(i, v)| (jac[(i, j)] - v).powi(2)).sum::<f64>().sqrt();
            let den: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num <= 1e-5 * den.max(1e-12), "{op:?} at {:?} column {j}: {num} vs {den}", x.coords);
        }
    }
}

#[test]
fn jacobians_match_finite_differences() {
    let fam = intervals();
    assert_jacobian_matches(ForwardOp::Integration, &fam, 16, 20);
    assert_jacobian_matches(ForwardOp::Identity, &fam, 16, 20);
    assert_jacobian_matches(ForwardOp::Multiplication { weight: Weight::PeriodicExpInverse }, &fam, 8, 10);
    assert_jacobian_matches(ForwardOp::Identity, &triangles(), 4, 10);
}

#[test]
fn pure_frequency_gets_fejer_weight() {
    // cos(2πt) = (e^{2πit} + e^{-2πit})/2 sampled finely: c_1 = 1/2, weighted by 1/2 at N = 1.
    let values: Vec<f64> = (0..=20000).map(|j| (std::f64::consts::TAU * j as f64 / 20000.0).cos()).collect();
    let f = FunctionRep::sampled(values).unwrap();
    let m = project_fejer(&f, 1).unwrap();
    assert!((m.coeffs[1] - std::f64::consts::SQRT_2 * 0.25).abs() < 1e-7);
    assert!(m.coeffs[0].abs() < 1e-12 && m.coeffs[2].abs() < 1e-7);
}

#[test]
fn parseval_matches_quadrature_of_the_convolution() {
    let fam = intervals();
    for (n, h) in [(8, [0.25, 0.75]), (16, [0.13, 0.58]), (5, [0.4, 0.9])] {
        let m = measure_point(ForwardOp::Integration, &fam, &h, n).unwrap();
        let q = simpson(&|t| m.evaluate(t).powi(2), 0.0, 1.0, 1e-13);
        assert!((measurement_inner(&m, &m).unwrap() - q).abs() < 1e-8);
    }
}

#[test]
fn coefficients_match_quadrature_oracle() {
    // F(χ_[1/4,3/4]) against direct quadrature of ∫ F(t) e^{-2πikt} dt.
    let fam = intervals();
    let n = 8;
    let m = measure_point(ForwardOp::Integration, &fam, &[0.25, 0.75], n).unwrap();
    let big_f = |t: f64| (t - 0.25).clamp(0.0, 0.5);
    for k in 1..=n {
        let w = 1.0 - k as f64 / (n as f64 + 1.0);
        let kt = std::f64::consts::TAU * k as f64;
        let re = simpson(&|t| big_f(t) * (kt * t).cos(), 0.0, 0.25, 1e-14)
            + simpson(&|t| big_f(t) * (kt * t).cos(), 0.25, 0.75, 1e-14)
            + simpson(&|t| big_f(t) * (kt * t).cos(), 0.75, 1.0, 1e-14);
        let im = -(simpson(&|t| big_f(t) * (kt * t).sin(), 0.0, 0.25, 1e-14)
            + simpson(&|t| big_f(t) * (kt * t).sin(), 0.25, 0.75, 1e-14)
            + simpson(&|t| big_f(t) * (kt * t).sin(), 0.75, 1.0, 1e-14));
        let s = std::f64::consts::SQRT_2 * w;
        assert!((m.coeffs[2 * k - 1] - s * re).abs() < 1e-8);
        assert!((m.coeffs[2 * k] - s * im).abs() < 1e-8, "k={k} {} vs {}", m.coeffs[2 * k], s * im);
    }
}

#[test]
fn triangle_measurement_matches_monte_carlo_free_oracle() {
    // Zero-frequency slot is the area; the Parseval norm is bounded by the L² norm.
    let fam = triangles();
    let h = fam.simplex_chart().unwrap().centre_coords();
    let m = measure_point(ForwardOp::Identity, &fam, &h, 4).unwrap();
    let area = chartrecon::geometry::SimplexParams::new(vec![vec![0.3, 0.3], vec![0.7, 0.35], vec![0.4, 0.7]])
        .unwrap()
        .volume();
    assert!((m.coeffs[0] - area).abs() < 1e-15);
    assert!(m.norm() <= area.sqrt() + 1e-12);
}

#[test]
fn deficit_decreases_with_bandwidth() {
    let fam = intervals();
    let coarse = projection_deficit(ForwardOp::Integration, &fam, 4, 50, 1).unwrap();
    let fine = projection_deficit(ForwardOp::Integration, &fam, 256, 50, 1).unwrap();
    assert!(fine < coarse && fine > 0.0);
}

#[test]
fn fejer_is_an_l1_contraction() {
    let fam = intervals();
    for x in fam.sample_compact(100, 5).unwrap() {
        let f = FunctionRep::interval(x.coords[0], x.coords[1]).unwrap();
        let m = project_fejer(&f, 12).unwrap();
        let l1 = simpson(&|t| m.evaluate(t).abs(), 0.0, 1.0, 1e-10);
        assert!(l1 <= (x.coords[1] - x.coords[0]) + 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn projection_is_linear(a in 0.05f64..0.45, b in 0.55f64..0.95, c in -3.0f64..3.0, d in -3.0f64..3.0, n in 0usize..12) {
        let f = FunctionRep::interval(a, b).unwrap();
        let g = FunctionRep::interval(a * 0.5, 1.0 - a * 0.3).unwrap();
        let comb = FunctionRep::combination(chartrecon::funcspace::Domain::UnitInterval, vec![(c, f.clone()), (d, g.clone())]).unwrap();
        let mc = project_fejer(&comb, n).unwrap();
        let (mf, mg) = (project_fejer(&f, n).unwrap(), project_fejer(&g, n).unwrap());
        for i in 0..mc.coeffs.len() {
            prop_assert!((mc.coeffs[i] - (c * mf.coeffs[i] + d * mg.coeffs[i])).abs() < 1e-12);
        }
    }
}
