use std::f64::consts::PI;

use chartrecon::forward::{apply_forward, ForwardOp};
use chartrecon::funcspace::{fourier_coefficients, lp_distance, lp_norm, Domain, FunctionRep};
use chartrecon::geometry::{ball_symmdiff_exact, BallParams};
use num_complex::Complex64;
use proptest::prelude::*;

mod common;
use common::{lens_area, simpson, simpson_split};

fn coeff(f: &FunctionRep, k_max: i64, k: i64) -> Complex64 {
    fourier_coefficients(f, k_max).unwrap()[(k + k_max) as usize]
}

#[test]
fn norms_of_simple_indicators() {
    assert!((lp_norm(&FunctionRep::interval(0.0, 1.0).unwrap(), 1.0).unwrap() - 1.0).abs() < 1e-15);
    let disk = FunctionRep::ball(vec![0.0, 0.0], 1.0).unwrap();
    assert!((lp_norm(&disk, 1.0).unwrap() - PI).abs() < 1e-14);
    assert!(lp_norm(&disk, 0.5).is_err());
}

#[test]
fn gaussian_l2_norm_matches_quadrature() {
    let g = FunctionRep::gaussian(vec![0.0]).unwrap();
    let oracle = simpson(&|z: f64| (-2.0 * z * z).exp(), -12.0, 12.0, 1e-14).sqrt();
    let v = lp_norm(&g, 2.0).unwrap();
    assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
    assert!((v - (PI / 2.0).powf(0.25)).abs() < 1e-12);
}

#[test]
fn distances_of_indicators() {
    let left = FunctionRep::interval(0.0, 0.5).unwrap();
    let right = FunctionRep::interval(0.5, 1.0).unwrap();
    assert_eq!(lp_distance(&left, &left, 1.0).unwrap(), 0.0);
    assert!((lp_distance(&left, &right, 1.0).unwrap() - 1.0).abs() < 1e-15);

    let a = FunctionRep::ball(vec![0.0, 0.0], 1.0).unwrap();
    let b = FunctionRep::ball(vec![1.0, 0.0], 1.0).unwrap();
    let oracle = 2.0 * PI - 2.0 * lens_area(1.0, 1.0, 1.0);
    let closed = 2.0 * PI - 2.0 * (2.0 * (0.5f64).acos() - 0.5 * 3f64.sqrt());
    assert!((oracle - closed).abs() < 1e-14);
    assert!((lp_distance(&a, &b, 1.0).unwrap() - oracle).abs() < 1e-12);
    assert!((oracle - 3.8264).abs() < 1e-4);
    assert!(lp_distance(&left, &a, 1.0).is_err());
}

#[test]
fn sup_norm_of_distinct_balls_is_one() {
    let a = FunctionRep::ball(vec![0.0, 0.0], 1.0).unwrap();
    for shift in [1e-6, 0.01, 0.5, 3.0] {
        let b = FunctionRep::ball(vec![shift, 0.0], 1.0).unwrap();
        assert_eq!(lp_distance(&a, &b, f64::INFINITY).unwrap(), 1.0);
    }
}

#[test]
fn evaluation_conventions() {
    let f = FunctionRep::interval(0.2, 0.8).unwrap();
    assert_eq!(f.evaluate(&[0.5]).unwrap(), 1.0);
    assert_eq!(f.evaluate(&[0.9]).unwrap(), 0.0);
    assert_eq!(f.evaluate(&[0.2]).unwrap(), 1.0);
    assert!(f.evaluate(&[1.5]).is_err());
    let big = apply_forward(ForwardOp::Integration, &FunctionRep::interval(0.0, 1.0).unwrap()).unwrap();
    assert!((big.evaluate(&[0.3]).unwrap() - 0.3).abs() < 1e-15);
}

#[test]
fn invalid_representations_are_rejected() {
    assert!(FunctionRep::interval(0.5, 0.5).is_err());
    assert!(FunctionRep::interval(-0.1, 0.5).is_err());
    assert!(FunctionRep::interval_with_intensity(0.1, 0.5, 0.0).is_err());
    assert!(FunctionRep::ball(vec![0.0], -1.0).is_err());
    assert!(fourier_coefficients(&FunctionRep::interval(0.1, 0.5).unwrap(), -1).is_err());
}

#[test]
fn fourier_coefficients_match_quadrature() {
    let one = FunctionRep::interval(0.0, 1.0).unwrap();
    let c = fourier_coefficients(&one, 3).unwrap();
    assert!((c[3] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    assert!(c.iter().enumerate().filter(|(i, _)| *i != 3).all(|(_, z)| z.norm() < 1e-15));

    let half = FunctionRep::interval(0.0, 0.5).unwrap();
    let re = simpson(&|t: f64| if t < 0.5 { (2.0 * PI * t).cos() } else { 0.0 }, 0.0, 0.5, 1e-13);
    let im = simpson(&|t: f64| -(2.0 * PI * t).sin(), 0.0, 0.5, 1e-13);
    let c1 = coeff(&half, 1, 1);
    assert!((c1 - Complex64::new(re, im)).norm() < 1e-10);
    assert!((c1 - Complex64::new(0.0, -1.0 / PI)).norm() < 1e-14);

    let g = apply_forward(ForwardOp::Integration, &FunctionRep::interval(0.25, 0.75).unwrap()).unwrap();
    let eval = |t: f64| g.evaluate(&[t]).unwrap();
    let c0 = simpson_split(&eval, 0.0, 1.0, &[0.25, 0.75], 1e-13);
    assert!((coeff(&g, 0, 0).re - c0).abs() < 1e-10);
}

#[test]
fn closed_form_coefficients_match_quadrature_on_random_intervals() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let a: f64 = rng.gen_range(0.0..0.9);
        let b: f64 = rng.gen_range(a + 0.01..1.0);
        let f = FunctionRep::interval(a, b).unwrap();
        let c = fourier_coefficients(&f, 6).unwrap();
        for k in -6i64..=6 {
            let w = 2.0 * PI * k as f64;
            let re = simpson(&|t: f64| (w * t).cos(), a, b, 1e-13);
            let im = simpson(&|t: f64| -(w * t).sin(), a, b, 1e-13);
            assert!((c[(k + 6) as usize] - Complex64::new(re, im)).norm() < 1e-8, "k={k} on [{a},{b}]");
            assert!((c[(k + 6) as usize] - c[(6 - k) as usize].conj()).norm() < 1e-14);
        }
    }
}

fn interval_strategy() -> impl Strategy<Value = FunctionRep> {
    (0.0..0.95f64, 0.01..0.5f64).prop_map(|(a, w)| FunctionRep::interval(a, (a + w).min(1.0)).unwrap())
}

fn ball_strategy() -> impl Strategy<Value = BallParams> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.2..1.5f64).prop_map(|(x, y, r)| BallParams::new(vec![x, y], r).unwrap())
}

fn ball_rep(b: &BallParams) -> FunctionRep {
    FunctionRep::ball(b.centre.clone(), b.radius).unwrap()
}

proptest! {
    #[test]
    fn interval_distance_is_a_metric(f in interval_strategy(), g in interval_strategy(), h in interval_strategy()) {
        let d = |x: &FunctionRep, y: &FunctionRep| lp_distance(x, y, 1.0).unwrap();
        prop_assert!((d(&f, &g) - d(&g, &f)).abs() <= 1e-12);
        prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 1e-12);
        prop_assert!(d(&f, &g) >= 0.0);
    }

    #[test]
    fn ball_distance_is_a_metric(a in ball_strategy(), b in ball_strategy(), c in ball_strategy(), p in 1.0..4.0f64) {
        let (fa, fb, fc) = (ball_rep(&a), ball_rep(&b), ball_rep(&c));
        let d = |x: &FunctionRep, y: &FunctionRep| lp_distance(x, y, p).unwrap();
        prop_assert!((d(&fa, &fb) - d(&fb, &fa)).abs() <= 1e-12);
        prop_assert!(d(&fa, &fc) <= d(&fa, &fb) + d(&fb, &fc) + 1e-12);
    }

    #[test]
    fn indicator_distance_is_symmdiff_root(a in ball_strategy(), b in ball_strategy(), p in 1.0..4.0f64) {
        let d = lp_distance(&ball_rep(&a), &ball_rep(&b), p).unwrap();
        let s = ball_symmdiff_exact(&a, &b).unwrap();
        prop_assert!((d.powf(p) - s).abs() <= 1e-10 * (1.0 + s));
    }

    #[test]
    fn integration_is_linear(f in interval_strategy(), g in interval_strategy(), x in -2.0..2.0f64, y in -2.0..2.0f64, t in 0.0..1.0f64) {
        let combo = FunctionRep::combination(Domain::UnitInterval, vec![(x, f.clone()), (y, g.clone())]).unwrap();
        let lhs = apply_forward(ForwardOp::Integration, &combo).unwrap().evaluate(&[t]).unwrap();
        let ff = apply_forward(ForwardOp::Integration, &f).unwrap().evaluate(&[t]).unwrap();
        let fg = apply_forward(ForwardOp::Integration, &g).unwrap().evaluate(&[t]).unwrap();
        prop_assert!((lhs - (x * ff + y * fg)).abs() <= 1e-12);
    }
}
