//! Checks against values obtained without the library: a hand-rolled RK4, closed-form periods
//! and linearisations, and quadratures done once offline.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use annulus_twist::fixed::{find_all_fixed_points, FixedClass};
use annulus_twist::map::{AnnulusMap, HamiltonianTwist, MapSpec};
use annulus_twist::ode::{energy, flow, period_map, PendulumParams};
use annulus_twist::{AnnulusPoint, Error, LiftPoint, PlanePoint};

fn rk4(mut x: f64, mut y: f64, a: f64, t1: f64, steps: usize) -> (f64, f64) {
    let h = t1 / steps as f64;
    let f = |t: f64, x: f64, y: f64| (y, -x.sin() + a * t.cos());
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = f(t, x, y);
        let k2 = f(t + h / 2.0, x + h / 2.0 * k1.0, y + h / 2.0 * k1.1);
        let k3 = f(t + h / 2.0, x + h / 2.0 * k2.0, y + h / 2.0 * k2.1);
        let k4 = f(t + h, x + h * k3.0, y + h * k3.1);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (x, y)
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    while (a - b).abs() > 1e-15 * a {
        (a, b) = ((a + b) / 2.0, (a * b).sqrt());
    }
    a
}

#[test]
fn period_map_matches_fixed_step_rk4() {
    for a in [0.0, 0.1, 0.3] {
        for (x, y) in [(1.0, 0.0), (0.3, 1.2), (-2.0, 0.5), (0.0, 2.2)] {
            let p = period_map(PlanePoint::new(x, y), PendulumParams::new(a).unwrap(), 1e-12).unwrap().endpoint;
            let (rx, ry) = rk4(x, y, a, TAU, 20_000);
            assert!((p.x - rx).abs() < 1e-8 && (p.y - ry).abs() < 1e-8, "a={a} ({x},{y}): {p:?} vs ({rx},{ry})");
        }
    }
}

#[test]
fn unforced_swing_returns_after_the_elliptic_period() {
    let free = PendulumParams::new(0.0).unwrap();
    for theta in [0.2f64, 1.0, 2.0, 2.8] {
        let period = TAU / agm(1.0, (theta / 2.0).cos());
        let p = flow(PlanePoint::new(theta, 0.0), 0.0, period, free, 1e-12).unwrap().endpoint;
        assert!(p.distance(&PlanePoint::new(theta, 0.0)) < 1e-8, "θ₀ = {theta}: {p:?}");
        // half a period later it is at the opposite turning point
        let q = flow(PlanePoint::new(theta, 0.0), 0.0, period / 2.0, free, 1e-12).unwrap().endpoint;
        assert!(q.distance(&PlanePoint::new(-theta, 0.0)) < 1e-8);
    }
}

#[test]
fn small_swings_have_period_two_pi() {
    let free = PendulumParams::new(0.0).unwrap();
    let p = flow(PlanePoint::new(1e-4, 0.0), 0.0, TAU, free, 1e-12).unwrap().endpoint;
    assert!((p.x - 1e-4).abs() < 1e-11 && p.y.abs() < 1e-11);
}

#[test]
fn rotation_energy_is_conserved_without_forcing() {
    let free = PendulumParams::new(0.0).unwrap();
    let p0 = PlanePoint::new(0.0, 2.5);
    let p = flow(p0, 0.0, 50.0, free, 1e-12).unwrap().endpoint;
    assert!((energy(p) - energy(p0)).abs() < 1e-9);
}

#[test]
fn hamiltonian_equilibria_are_fixed() {
    for eps in [0.05, 0.1, 0.3] {
        let m = HamiltonianTwist::new(eps).unwrap();
        for (x, y) in [(0.0, 0.5), (0.5, 0.5)] {
            let q = m.lift_eval(LiftPoint::new(x, y)).unwrap();
            assert!((q.x - x).abs() < 1e-12 && (q.y - y).abs() < 1e-12);
        }
        // both boundary circles are invariant, moving left below and right above
        let b = m.lift_eval(LiftPoint::new(0.3, 0.0)).unwrap();
        let t = m.lift_eval(LiftPoint::new(0.3, 1.0)).unwrap();
        assert!(b.y.abs() < 1e-14 && (t.y - 1.0).abs() < 1e-14);
        assert!(b.x < 0.3 && t.x > 0.3);
    }
}

#[test]
fn hamiltonian_traces_match_the_linearisation() {
    for eps in [0.05, 0.1, 0.3] {
        let m = HamiltonianTwist::new(eps).unwrap();
        let saddle = m.jacobian(AnnulusPoint::new(0.0, 0.5)).unwrap();
        let centre = m.jacobian(AnnulusPoint::new(0.5, 0.5)).unwrap();
        let ts = 2.0 * (PI * ((1.0 - 2.0 * eps) * eps).sqrt()).cosh();
        let tc = 2.0 * (PI * ((1.0 + 2.0 * eps) * eps).sqrt()).cos();
        assert!((saddle.trace() - ts).abs() < 1e-8, "ε={eps}: {} vs {ts}", saddle.trace());
        assert!((centre.trace() - tc).abs() < 1e-8, "ε={eps}: {} vs {tc}", centre.trace());
        assert!((saddle.det() - 1.0).abs() < 1e-8 && (centre.det() - 1.0).abs() < 1e-8);
    }
    // pinned for the reference parameter
    let ts = 2.0 * (PI * (0.8f64 * 0.1).sqrt()).cosh();
    assert!((ts - 2.842_9).abs() < 1e-4);
}

#[test]
fn scan_reports_the_analytic_multipliers() {
    let scan = find_all_fixed_points(Arc::new(HamiltonianTwist::new(0.1).unwrap()), 1.3, (256, 128)).unwrap();
    for r in &scan.records {
        let expected = match r.class {
            FixedClass::Hyperbolic => 2.0 * (PI * (0.08f64).sqrt()).cosh(),
            FixedClass::Elliptic => 2.0 * (PI * (0.12f64).sqrt()).cos(),
            other => panic!("unexpected class {other:?}"),
        };
        assert!((r.multiplier_trace - expected).abs() < 1e-7);
    }
}

/// `∫₀¹ β[σ(h - h²) - σ'(h²/2 - h³/3)] dx` along the graph `y = h(x)` of the
/// invariant curve, evaluated with adaptive Gauss-Kronrod.
const BUMP_DRIFT_DIFFERENCE: [(f64, f64); 3] = [(0.7, 0.011_613_231_6), (1.3, 0.011_635_023_5), (2.3, 0.011_641_121_3)];

#[test]
fn bump_drift_witness_matches_quadrature() {
    let map = MapSpec::new("bump_drift").build().unwrap();
    for (phi, expected) in BUMP_DRIFT_DIFFERENCE {
        match find_all_fixed_points(map.clone(), phi, (256, 128)) {
            Err(Error::TheoremViolationWitness(v)) => {
                assert!((v.difference - expected).abs() < 1e-4, "φ={phi}: {} vs {expected}", v.difference)
            }
            other => panic!("φ={phi}: expected a witness, got {other:?}"),
        }
    }
}
