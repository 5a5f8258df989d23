use std::f64::consts::TAU;
use std::sync::Arc;

use annulus_twist::map::{check_hypotheses, ConjugatedShear, DensityChoice, MapSpec, SharedMap};
use annulus_twist::zero_set::*;
use annulus_twist::AnnulusPoint;

const PHIS: [f64; 5] = [0.6, 1.3, 2.1, 3.0, 3.9];

fn analytic_maps() -> Vec<SharedMap> {
    ["shear", "hamiltonian_twist", "conjugated_shear"]
        .into_iter()
        .map(|n| MapSpec::new(n).build().unwrap())
        .collect()
}

/// Largest vertical distance from a vertex of `set` to the graph of `f`.
fn off_graph(set: &InvariantSet, f: impl Fn(f64) -> f64) -> f64 {
    all_vertices(set).iter().map(|p| (p.y - f(p.x)).abs()).fold(0.0, f64::max)
}

#[test]
fn hypotheses_hold_for_the_reference_maps() {
    for map in analytic_maps() {
        let r = check_hypotheses(map.as_ref(), 128, 256).unwrap();
        assert!(r.ok(), "{}: {r:?}", map.name());
        assert!(r.twist_margin_bottom < 0.0 && r.twist_margin_top > 0.0);
    }
}

#[test]
fn hypothesis_failures_are_detected() {
    let id = check_hypotheses(MapSpec::new("identity").build().unwrap().as_ref(), 64, 128).unwrap();
    assert!(!id.twist_ok && id.measure_ok);
    let bump = check_hypotheses(MapSpec::new("bump_drift").build().unwrap().as_ref(), 64, 256).unwrap();
    assert!(bump.twist_ok && !bump.measure_ok);
    let folded = check_hypotheses(MapSpec::new("folded_drift").build().unwrap().as_ref(), 64, 256).unwrap();
    assert!(!folded.measure_ok);
    let leb = ConjugatedShear::new(0.2, DensityChoice::Lebesgue).unwrap();
    assert!(!check_hypotheses(&leb, 64, 256).unwrap().measure_ok);
}

#[test]
fn zero_set_winds_once_for_every_slope() {
    for map in analytic_maps() {
        for (nx, ny) in [(128, 64), (256, 128)] {
            let grid = DisplacementGrid::sample(map.clone(), nx, ny).unwrap();
            for phi in PHIS {
                let set = extract_components(&grid.field(phi).unwrap(), REFINE_TOL).unwrap();
                assert_eq!(set.total_winding(), 1, "{} φ={phi} {nx}×{ny}", map.name());
                assert!(set.components.iter().all(|c| c.closed));
            }
        }
    }
}

#[test]
fn shear_zero_set_is_the_middle_circle() {
    let set = extract_regular(MapSpec::new("shear").build().unwrap(), 1.3, 128, 64, 0).unwrap();
    assert!(off_graph(&set, |_| 0.5) < 1e-9);
}

#[test]
fn conjugated_shear_zero_set_is_the_image_of_the_middle_circle() {
    let c = 0.2;
    for phi in [0.6, 2.1] {
        let set = extract_regular(Arc::new(ConjugatedShear::new(c, DensityChoice::Pushforward).unwrap()), phi, 256, 128, 0)
            .unwrap();
        let d = off_graph(&set, |x| 0.5 + c * (TAU * x).sin() / 4.0);
        assert!(d < 1e-6, "φ={phi}: {d}");
    }
}

#[test]
fn zero_set_converges_under_doubling() {
    let map = MapSpec::new("hamiltonian_twist").build().unwrap();
    for phi in [0.6, 1.3, 3.0] {
        let coarse = extract_regular(map.clone(), phi, 128, 64, 0).unwrap();
        let fine = extract_regular(map.clone(), phi, 256, 128, 0).unwrap();
        let d = hausdorff(&all_vertices(&coarse), &all_vertices(&fine));
        assert!(d < 2.0 / 128.0, "φ={phi}: {d}");
    }
}

#[test]
fn conjugated_reading_agrees_with_the_original_one() {
    let map = MapSpec::new("hamiltonian_twist").build().unwrap();
    let phi = 1.3;
    let plain = extract_regular(map.clone(), phi, 256, 128, 0).unwrap();
    let (t_set, _) = extract_conjugated(map, phi, 256, 128, 0).unwrap();
    let back: Vec<AnnulusPoint> = t_set
        .components
        .iter()
        .flat_map(|c| c.vertices.iter().map(|v| t_invert(*v, phi).project()))
        .collect();
    assert!(hausdorff(&all_vertices(&plain), &back) < 2.0 / 256.0);
}

#[test]
fn sign_of_vertical_displacement() {
    let bump = extract_regular(MapSpec::new("bump_drift").build().unwrap(), 1.3, 128, 64, 0).unwrap();
    assert!(bump.components.iter().all(|c| c.u == USign::Positive));
    let folded = extract_regular(MapSpec::new("folded_drift").build().unwrap(), 0.7, 256, 128, 4).unwrap();
    assert!(folded.components.iter().all(|c| c.u == USign::Positive));
    let ham = extract_regular(MapSpec::new("hamiltonian_twist").build().unwrap(), 1.3, 128, 64, 0).unwrap();
    assert!(ham.components.iter().any(|c| c.u == USign::Mixed));
}

#[test]
fn pendulum_annulus_zero_set_winds_once() {
    let map = MapSpec::new("pendulum_annulus").build().unwrap();
    let grid = DisplacementGrid::sample(map, 256, 128).unwrap();
    for phi in PHIS {
        let set = extract_components(&grid.field(phi).unwrap(), REFINE_TOL).unwrap();
        assert_eq!(set.total_winding(), 1, "φ={phi}");
    }
}
