//! Oracle-backed checks of the penalty module: prox against golden-section
//! search, derivatives against finite differences, values against numerical
//! integration of the derivative, threshold properties against prox
//! differences.

mod common;

use common::*;
use msc::penalty::{a_from_slope, in_parameter_set};
use msc::{PenaltyKind, PenaltySpec};
use rand::Rng;

#[test]
fn prox_matches_golden_section_oracle() {
    let mut rng = rng(0x5eed_0001);
    for _ in 0..300 {
        let (spec, lambda, y) = random_prox_tuple(&mut rng);
        let got = spec.prox(y, lambda).unwrap();
        let want = prox_oracle(&spec, y, lambda);
        assert!(
            (got - want).abs() <= 1e-6,
            "prox mismatch for {:?} lambda={lambda} y={y}: got {got}, oracle {want}",
            spec
        );
    }
}

#[test]
fn log_value_matches_integral_of_derivative() {
    // phi(x) = int_0^x dt/(1+a t); at a=1, x=1 this is ln 2.
    let spec = PenaltySpec::log(1.0).unwrap();
    assert!((spec.value(1.0) - std::f64::consts::LN_2).abs() < 1e-12);

    for &(a, x) in &[(0.3, 2.5), (1.7, 0.9), (4.0, 6.0)] {
        let spec = PenaltySpec::log(a).unwrap();
        let num = simpson(|t| 1.0 / (1.0 + a * t), 0.0, x, 2000);
        assert!(
            (spec.value(x) - num).abs() < 1e-9,
            "log value a={a} x={x}: {} vs integral {num}",
            spec.value(x)
        );
    }
}

#[test]
fn atan_value_matches_integral_and_limit() {
    for &(a, x) in &[(0.5, 2.0), (1.0, 1.0), (2.5, 7.0)] {
        let spec = PenaltySpec::atan(a).unwrap();
        let num = simpson(|t| 1.0 / (a * a * t * t + a * t + 1.0), 0.0, x, 4000);
        assert!(
            (spec.value(x) - num).abs() < 1e-9,
            "atan value a={a} x={x}: {} vs integral {num}",
            spec.value(x)
        );
    }
    // Saturation limit 2*pi/(3*sqrt(3)) at a = 1.
    let spec = PenaltySpec::atan(1.0).unwrap();
    let limit = 2.0 * std::f64::consts::PI / (3.0 * 3.0_f64.sqrt());
    assert!((limit - 1.209_199_576_156_145).abs() < 1e-12);
    assert!((spec.value(1e9) - limit).abs() < 1e-8);
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = rng(0x5eed_0002);
    for _ in 0..200 {
        let a = rng.gen_range(0.0..4.0);
        let x: f64 = rng.gen_range(0.05..8.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        for spec in [
            PenaltySpec::log(a).unwrap(),
            PenaltySpec::atan(a).unwrap(),
            PenaltySpec::abs(),
        ] {
            let f = |t: f64| spec.value(t);
            let h = 1e-4 * (1.0 + x.abs());
            let d1 = central_d1(f, x, h);
            let d2 = central_d2(f, x, h);
            let d3 = central_d3(f, x, 10.0 * h);
            assert!(
                (spec.deriv(x, 1).unwrap() - d1).abs() < 1e-6 * (1.0 + d1.abs()),
                "d1 mismatch {spec:?} x={x}"
            );
            assert!(
                (spec.deriv(x, 2).unwrap() - d2).abs() < 1e-5 * (1.0 + d2.abs()),
                "d2 mismatch {spec:?} x={x}"
            );
            assert!(
                (spec.deriv(x, 3).unwrap() - d3).abs() < 2e-3 * (1.0 + d3.abs()),
                "d3 mismatch {spec:?} x={x}: {} vs {d3}",
                spec.deriv(x, 3).unwrap()
            );
        }
    }
}

#[test]
fn derivative_right_limits_at_zero() {
    let a = 0.7;
    let log = PenaltySpec::log(a).unwrap();
    let atan = PenaltySpec::atan(a).unwrap();
    for spec in [log, atan] {
        assert_eq!(spec.deriv(0.0, 1).unwrap(), 1.0);
        assert!((spec.deriv(0.0, 2).unwrap() + a).abs() < 1e-15);
    }
    // phi'''(0+): 2a^2 for log, 0 for atan (the b = a^2 design).
    assert!((log.deriv(0.0, 3).unwrap() - 2.0 * a * a).abs() < 1e-15);
    assert_eq!(atan.deriv(0.0, 3).unwrap(), 0.0);
}

#[test]
fn threshold_props_match_prox_finite_differences() {
    // Slope via Richardson-extrapolated one-sided differences of the
    // threshold function itself; curvature via second differences.
    for kind in [PenaltyKind::Log, PenaltyKind::Atan] {
        let spec = PenaltySpec::with_kind(kind, 0.25, 0.0).unwrap();
        let lambda = 2.0;
        let props = spec.threshold_props(lambda).unwrap();
        assert_eq!(props.threshold, lambda);

        let tf = |y: f64| spec.prox(y, lambda).unwrap();
        let d = |h: f64| tf(lambda + h) / h;
        let slope = (10.0 * d(1e-4) - d(1e-3)) / 9.0;
        assert!(
            (slope - props.slope).abs() < 0.01 * props.slope,
            "{kind:?} slope fd {slope} vs analytic {}",
            props.slope
        );

        let d2 = |h: f64| (tf(lambda + 2.0 * h) - 2.0 * tf(lambda + h)) / (h * h);
        let curv = 2.0 * d2(5e-4) - d2(1e-3);
        assert!(
            (curv - props.curvature).abs() < 0.05 * (1.0 + props.curvature.abs()),
            "{kind:?} curvature fd {curv} vs analytic {}",
            props.curvature
        );
    }
}

#[test]
fn slope_roundtrip_through_a() {
    let mut rng = rng(0x5eed_0003);
    for _ in 0..100 {
        let lambda = rng.gen_range(0.1..10.0);
        let slope = rng.gen_range(1.01..50.0);
        let a = a_from_slope(lambda, slope).unwrap();
        assert!(in_parameter_set(lambda, a));
        for spec in [PenaltySpec::log(a).unwrap(), PenaltySpec::atan(a).unwrap()] {
            let props = spec.threshold_props(lambda).unwrap();
            assert!(
                (props.slope - slope).abs() < 1e-9 * slope,
                "slope roundtrip {slope} -> a={a} -> {}",
                props.slope
            );
        }
    }
    assert_eq!(a_from_slope(2.0, f64::INFINITY).unwrap(), 0.5);
    assert_eq!(a_from_slope(2.0, 1.0).unwrap(), 0.0);
}

#[test]
fn prox_symmetry_monotonicity_and_dead_zone() {
    let mut rng = rng(0x5eed_0004);
    for _ in 0..300 {
        let (spec, lambda, y) = random_prox_tuple(&mut rng);
        let p = spec.prox(y, lambda).unwrap();
        // Odd symmetry and shrinkage.
        assert_eq!(spec.prox(-y, lambda).unwrap(), -p);
        assert!(p.abs() <= y.abs() + 1e-15);
        assert!(p * y >= 0.0);
        // Dead zone is exactly [-lambda, lambda].
        if y.abs() <= lambda {
            assert_eq!(p, 0.0);
        } else {
            assert!(p != 0.0, "{spec:?} y={y} lambda={lambda} gave 0 above threshold");
        }
        // Monotone in y.
        let y2 = y + rng.gen_range(0.0..1.0);
        assert!(spec.prox(y2, lambda).unwrap() >= p - 1e-12);
    }
}

#[test]
fn penalty_ordering_atan_below_log_below_abs() {
    let mut rng = rng(0x5eed_0005);
    for _ in 0..200 {
        let a = rng.gen_range(0.01..4.0);
        let x = rng.gen_range(-10.0..10.0);
        let log = PenaltySpec::log(a).unwrap().value(x);
        let atan = PenaltySpec::atan(a).unwrap().value(x);
        assert!(atan <= log + 1e-12 && log <= x.abs() + 1e-12);
    }
}
