use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use annulus_twist::fixed::{ball_measure, classify_fixed, FixedClass};
use annulus_twist::geometry::{wrap01, wrap_signed};
use annulus_twist::io::{canonical_json, fmt6};
use annulus_twist::map::{AnnulusMap, ConjugatedShear, DensityChoice, HamiltonianTwist, Shear};
use annulus_twist::path::{densify, path_algebra_terminal_type, signed_crossings};
use annulus_twist::periodic::{classify, CycleClass};
use annulus_twist::zero_set::{annulus_winding, t_apply, t_invert};
use annulus_twist::{AnnulusPoint, Jacobian2, LiftPoint, PlanePoint};

fn sign() -> impl Strategy<Value = i8> {
    prop_oneof![Just(-1i8), Just(1i8)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn t_coordinates_round_trip(x in -3.0..3.0f64, y in 0.0..1.0f64, phi in 0.1..10.0f64) {
        let p = LiftPoint::new(x, y);
        let q = t_invert(t_apply(p, phi), phi);
        prop_assert!((q.x - x).abs() < 1e-12 && q.y == y);
    }

    #[test]
    fn wrapping_lands_in_range(x in -1e6..1e6f64) {
        let w = wrap01(x);
        prop_assert!((0.0..1.0).contains(&w));
        let s = wrap_signed(x);
        prop_assert!((-0.5..0.5).contains(&s));
        prop_assert!(wrap_signed(w - s).abs() < 1e-9);
    }

    #[test]
    fn densify_respects_the_step(pts in prop::collection::vec((0.0..1.0f64, 0.05..0.95f64), 2..12), h in 0.005..0.2f64) {
        let poly: Vec<LiftPoint> = pts.iter().map(|&(x, y)| LiftPoint::new(x, y)).collect();
        let dense = densify(&poly, false, h);
        prop_assert_eq!(dense.first(), poly.first());
        prop_assert_eq!(dense.last(), poly.last());
        for w in dense.windows(2) {
            prop_assert!((w[1].x - w[0].x).hypot(w[1].y - w[0].y) <= h * (1.0 + 1e-9));
        }
    }

    #[test]
    fn lebesgue_ball_has_area_pi_r_squared(x in 0.0..1.0f64, y in 0.2..0.8f64, r in 0.001..0.15f64) {
        let m = ball_measure(&|_| 1.0, LiftPoint::new(x, y), r);
        prop_assert!((m - PI * r * r).abs() < 1e-12);
    }

    #[test]
    fn linear_density_integrates_to_its_centre_value(y in 0.3..0.7f64, r in 0.01..0.2f64) {
        // ρ(x, y) = y is harmonic, so its ball average is ρ(centre)
        let m = ball_measure(&|p: AnnulusPoint| p.y, LiftPoint::new(0.5, y), r);
        prop_assert!((m - PI * r * r * y).abs() < 1e-12);
    }

    #[test]
    fn every_path_ends_on_type_plus_one(flow in sign(), u_next in sign()) {
        prop_assert_eq!(path_algebra_terminal_type(flow, u_next), 1);
    }

    #[test]
    fn graphs_wind_once(a in prop::collection::vec(-0.2..0.2f64, 1..5), shift in 0.0..1.0f64, n in 16usize..200) {
        let pts: Vec<LiftPoint> = (0..n)
            .map(|k| {
                let x = shift + k as f64 / n as f64;
                let y = 0.5 + a.iter().enumerate().map(|(j, c)| c * (TAU * (j + 1) as f64 * x).sin() / (j + 1) as f64).sum::<f64>() / 2.0;
                LiftPoint::new(x, y)
            })
            .collect();
        prop_assert_eq!(annulus_winding(&pts), 1);
        let reversed: Vec<LiftPoint> = pts.iter().rev().copied().collect();
        prop_assert_eq!(annulus_winding(&reversed), -1);
    }

    #[test]
    fn contractible_loops_wind_zero(cx in 0.0..1.0f64, cy in 0.3..0.7f64, r in 0.01..0.2f64, n in 8usize..100) {
        let pts: Vec<LiftPoint> = (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                LiftPoint::new(cx + r * t.cos(), cy + r * t.sin())
            })
            .collect();
        prop_assert_eq!(annulus_winding(&pts), 0);
    }

    #[test]
    fn area_preserving_class_follows_the_trace(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64) {
        prop_assume!(a.abs() > 1e-3);
        // complete to det = 1
        let d = (1.0 + b * c) / a;
        let j = Jacobian2::new(a, b, c, d);
        let tr = j.trace();
        prop_assume!((tr.abs() - 2.0).abs() > 1e-3);
        let expected = if tr.abs() < 2.0 { FixedClass::Elliptic } else { FixedClass::Hyperbolic };
        prop_assert_eq!(classify_fixed(&j), expected);
        let cyc = if tr.abs() < 2.0 { CycleClass::Center } else { CycleClass::Saddle };
        prop_assert_eq!(classify(tr), cyc);
    }

    #[test]
    fn disjoint_segments_do_not_cross(y0 in 0.0..1.0f64, gap in 0.01..1.0f64) {
        let a = vec![PlanePoint::new(0.0, y0), PlanePoint::new(1.0, y0)];
        let b = vec![PlanePoint::new(0.0, y0 + gap), PlanePoint::new(1.0, y0 + gap)];
        prop_assert_eq!(signed_crossings(&a, &b), 0);
    }

    #[test]
    fn transverse_segments_cross_once(t in 0.05..0.95f64, s in 0.05..0.95f64) {
        let a = vec![PlanePoint::new(0.0, s), PlanePoint::new(1.0, s)];
        let b = vec![PlanePoint::new(t, 0.0), PlanePoint::new(t, 1.0)];
        prop_assert_eq!(signed_crossings(&a, &b).abs(), 1);
    }

    #[test]
    fn shear_commutes_with_deck_translations(x in 0.0..1.0f64, y in 0.0..1.0f64, k in -3i32..3) {
        let a = Shear.lift_eval(LiftPoint::new(x, y)).unwrap();
        let b = Shear.lift_eval(LiftPoint::new(x + k as f64, y)).unwrap();
        prop_assert!((b.x - a.x - k as f64).abs() < 1e-12 && a.y == b.y);
    }

    #[test]
    fn conjugating_chart_round_trips(x in 0.0..1.0f64, y in 0.0..1.0f64, c in -0.9..0.9f64) {
        let m = ConjugatedShear::new(c, DensityChoice::Pushforward).unwrap();
        let (px, py) = m.psi(x, y);
        let (qx, qy) = m.psi_inv(px, py);
        prop_assert!(qx == x && (qy - y).abs() < 1e-12);
    }

    #[test]
    fn conjugated_shear_transports_its_density(x in 0.0..1.0f64, y in 0.02..0.98f64) {
        let m = ConjugatedShear::new(0.2, DensityChoice::Pushforward).unwrap();
        let p = AnnulusPoint::new(x, y);
        let j = m.jacobian(p).unwrap();
        let rho_image = m.invariant_density(m.eval(p).unwrap());
        prop_assert!((rho_image * j.det() - m.invariant_density(p)).abs() < 1e-9);
    }

    #[test]
    fn six_decimal_formatting_is_stable(v in -1e6..1e6f64) {
        let s = fmt6(v);
        prop_assert_eq!(s.split('.').nth(1).map(str::len), Some(6));
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-7 * (1.0 + v.abs() * 1e-9));
        prop_assert_eq!(fmt6(back), s);
    }

    #[test]
    fn canonical_json_is_idempotent(v in -1e3..1e3f64, small in -1e-3..1e-3f64) {
        let doc = serde_json::json!({"x": v, "residual": small, "nested": [v, {"drift": small}]});
        let once = canonical_json(&doc);
        prop_assert_eq!(canonical_json(&once), once);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_map_preserves_area(x in 0.0..1.0f64, y in 0.0..1.0f64, eps in 0.0..0.35f64) {
        let m = HamiltonianTwist::new(eps).unwrap();
        let j = m.jacobian(AnnulusPoint::new(x, y)).unwrap();
        prop_assert!((j.det() - 1.0).abs() < 1e-8, "det {}", j.det());
    }

    #[test]
    fn hamiltonian_map_keeps_the_boundary(x in 0.0..1.0f64, eps in 0.0..0.35f64, top in any::<bool>()) {
        let y = if top { 1.0 } else { 0.0 };
        let m = HamiltonianTwist::new(eps).unwrap();
        let q = m.lift_eval(LiftPoint::new(x, y)).unwrap();
        prop_assert!((q.y - y).abs() < 1e-13);
    }
}
