//! Hand-built invariant sets and local junction pictures for the path machine.

use std::f64::consts::{PI, TAU};

use annulus_twist::geometry::LiftPoint;
use annulus_twist::map::AnnulusMap;
use annulus_twist::path::*;
use annulus_twist::zero_set::{annulus_winding, Component, InvariantSet, USign};
use annulus_twist::{Error, Result};

const N: usize = 512;

fn component(id: usize, pts: Vec<LiftPoint>, winding: i64, u: i8) -> Component {
    let n = pts.len();
    Component {
        id,
        vertices: pts,
        closed: true,
        winding,
        u: if u > 0 { USign::Positive } else { USign::Negative },
        vertical_disp: vec![0.01 * u as f64; n],
        min_grad: 1.0,
    }
}

fn set(components: Vec<Component>) -> InvariantSet {
    InvariantSet { components, phi: 1.0, grid_resolution: (N, N / 2), regular: true, min_grad: 1.0, grad_tol: 1e-6 }
}

fn sampled(n: usize, f: impl Fn(f64) -> (f64, f64)) -> Vec<LiftPoint> {
    (0..n)
        .map(|k| {
            let (x, y) = f(k as f64 / n as f64);
            LiftPoint::new(x, y)
        })
        .collect()
}

/// Wrap-around curve folded back on itself: `x = s + 0.25 sin 2πs`.
fn s_fold() -> Vec<LiftPoint> {
    sampled(2000, |s| (s + 0.25 * (TAU * s).sin(), 0.3 + 0.15 * (TAU * s).sin()))
}

/// Small clockwise oval tucked under the lower sheet of the fold.
fn oval() -> Vec<LiftPoint> {
    sampled(400, |s| (0.549 + 0.03 * (TAU * s).cos(), 0.27 - 0.03 * (TAU * s).sin()))
}

#[test]
fn fixtures_have_the_intended_windings() {
    assert_eq!(annulus_winding(&s_fold()), 1);
    assert_eq!(annulus_winding(&oval()), 0);
}

#[test]
fn sine_wiggle_has_two_criticals_per_lobe() {
    let comp = component(0, sampled(1600, |s| (0.5 + 0.1 * (2.0 * TAU * s).sin(), 0.5 + 0.2 * (TAU * s).cos())), 0, 1);
    let cps = find_critical_points(&comp, 4.0 / N as f64, None).unwrap();
    let good: Vec<&CriticalPoint> = cps.iter().filter(|c| !c.degenerate).collect();
    assert_eq!(good.len(), 4);
    // extrema of x at s = 1/8, 3/8, 5/8, 7/8
    for (c, s) in good.iter().zip([0.125, 0.375, 0.625, 0.875]) {
        assert!((c.vertex_index as f64 / 1600.0 - s).abs() < 2e-3, "{} vs {s}", c.vertex_index);
    }
    for w in good.windows(2) {
        assert_eq!(w[0].c, -w[1].c);
    }
}

#[test]
fn vertical_inflection_is_degenerate() {
    // x' ∝ cos 2πs - cos 4πs vanishes to second order at s = 0
    let comp = component(
        0,
        sampled(1600, |s| (0.5 + 0.1 * ((TAU * s).sin() - 0.5 * (2.0 * TAU * s).sin()), 0.5 + 0.2 * (TAU * s).cos())),
        0,
        1,
    );
    let cps = find_critical_points(&comp, 4.0 / N as f64, None).unwrap();
    let near_zero = |k: usize| k.min(1600 - k) < 20;
    let degenerate: Vec<&CriticalPoint> = cps.iter().filter(|c| c.degenerate).collect();
    assert!(degenerate.iter().any(|c| near_zero(c.vertex_index)), "{cps:?}");
    assert!(degenerate.iter().all(|c| c.c == 0));
    // strict extrema at s = 1/3 and 2/3 survive
    let good: Vec<usize> = cps.iter().filter(|c| !c.degenerate).map(|c| c.vertex_index).collect();
    assert_eq!(good.len(), 2, "{good:?}");
    assert!(good.iter().all(|&k| !near_zero(k)));
}

#[test]
fn horizontal_circle_has_no_criticals() {
    let comp = component(0, sampled(512, |s| (s, 0.5)), 1, 1);
    assert!(matches!(find_critical_points(&comp, 4.0 / N as f64, None), Err(Error::NoCriticalPoints(0))));
}

#[test]
fn s_fold_closes_on_itself() {
    let iset = set(vec![component(0, s_fold(), 1, 1)]);
    let cps = all_critical_points(&iset, default_eps_window(&iset), None).unwrap();
    assert_eq!(cps.iter().filter(|c| !c.degenerate).count(), 2);
    let path = find_closed_loop(&iset, &cps).unwrap();
    assert!(path.closed);
    assert_eq!(path.winding, 1);
    assert!(path.component_sequence().iter().all(|&id| id == 0));
    let verticals: Vec<&PathSegment> = path.segments.iter().filter(|s| s.kind == SegmentKind::Vertical).collect();
    assert_eq!(verticals.len(), 1);
    // the vertical stays inside the annulus
    assert!(verticals[0].points.iter().all(|p| p.y > 0.0 && p.y < 1.0));
}

#[test]
fn figure_eight_loop_uses_both_components() {
    let iset = set(vec![component(0, s_fold(), 1, 1), component(1, oval(), 0, 1)]);
    let cps = all_critical_points(&iset, default_eps_window(&iset), None).unwrap();
    let path = find_closed_loop(&iset, &cps).unwrap();
    assert!(path.closed);
    assert_eq!(path.winding, 1);
    // fold tip, down onto the oval, around it, down again to the lower sheet and back
    assert_eq!(path.component_sequence(), vec![1, 0]);
    let kinds: Vec<SegmentKind> = path.segments.iter().map(|s| s.kind).collect();
    assert_eq!(
        kinds,
        [SegmentKind::Vertical, SegmentKind::AlongComponent, SegmentKind::Vertical, SegmentKind::AlongComponent]
    );
    let first = &path.segments[0];
    assert!((first.end.y - 0.30).abs() < 1e-3, "lands on the oval top: {:?}", first.end);
    assert!(path.visited_criticals.iter().all(|c| c.type_sign() == Some(1)));
}

#[test]
fn path_from_every_positive_critical_ends_on_type_plus_one() {
    let iset = set(vec![component(0, s_fold(), 1, 1), component(1, oval(), 0, 1)]);
    let cps = all_critical_points(&iset, default_eps_window(&iset), None).unwrap();
    for start in cps.iter().filter(|c| !c.degenerate && c.type_sign() == Some(1)) {
        let p = generate_path(start, &iset, &cps).unwrap();
        let last = p.visited_criticals.last().unwrap();
        assert_eq!(last.type_sign(), Some(1));
    }
}

#[test]
fn mixed_component_is_refused() {
    let mut comp = component(0, s_fold(), 1, 1);
    comp.u = USign::Mixed;
    let iset = set(vec![comp]);
    let cps = all_critical_points(&iset, default_eps_window(&iset), None).unwrap();
    assert!(matches!(find_closed_loop(&iset, &cps), Err(Error::MixedComponent(0))));
}

#[test]
fn path_algebra_is_exhaustive() {
    for u in [-1i8, 1] {
        for flow in [-1i8, 1] {
            for u_next in [-1i8, 1] {
                assert_eq!(path_algebra_terminal_type(flow, u_next), 1, "u={u} f={flow} u'={u_next}");
            }
        }
    }
}

#[test]
fn table_rows_follow_the_rules() {
    for row in crit_table() {
        assert_eq!(row.rule_vertical(), row.vertical, "{row:?}");
    }
    for row in vert_table() {
        assert_eq!(row.rule_travel(), row.travel, "{row:?}");
    }
}

#[test]
fn every_table_row_is_free_of_crossings() {
    for row in crit_table() {
        let fx = crit_case_fixture(&row, row.vertical);
        assert_eq!(signed_crossings(&fx.path, &fx.image), 0, "{row:?}");
        assert!(!local_sides(&fx.path, fx.bbox, &fx.image, 1e-9).crosses(), "{row:?}");
    }
    for row in vert_table() {
        for slope in [0.0, 0.4, -0.7] {
            let fx = vert_case_fixture(&row, row.travel, slope);
            assert_eq!(signed_crossings(&fx.path, &fx.image), 0, "{row:?} slope {slope}");
            assert!(!local_sides(&fx.path, fx.bbox, &fx.image, 1e-9).crosses(), "{row:?} slope {slope}");
        }
    }
}

#[test]
fn flipped_choices_cross() {
    let flip = |d: Dir| match d {
        Dir::Up => Dir::Down,
        Dir::Down => Dir::Up,
        Dir::Left => Dir::Right,
        Dir::Right => Dir::Left,
    };
    for row in crit_table() {
        let fx = crit_case_fixture(&row, flip(row.vertical));
        assert!(local_sides(&fx.path, fx.bbox, &fx.image, 1e-9).crosses(), "{row:?}");
    }
    for row in vert_table() {
        let fx = vert_case_fixture(&row, flip(row.travel), 0.4);
        assert!(local_sides(&fx.path, fx.bbox, &fx.image, 1e-9).crosses(), "{row:?}");
    }
}

/// `(x + y - 1/2, y + 0.1·y(1-y))`: lifts every interior point.
struct Lifted;

impl AnnulusMap for Lifted {
    fn name(&self) -> &str {
        "lifted"
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        Ok(LiftPoint::new(p.x + p.y - 0.5, p.y + 0.1 * p.y * (1.0 - p.y)))
    }
}

struct ShearOnly;

impl AnnulusMap for ShearOnly {
    fn name(&self) -> &str {
        "shear"
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        Ok(LiftPoint::new(p.x + p.y - 0.5, p.y))
    }
}

fn middle_circle() -> DirectedPath {
    let pts = sampled(256, |s| (s, 0.5));
    DirectedPath {
        segments: vec![PathSegment {
            kind: SegmentKind::AlongComponent,
            start: pts[0].project(),
            end: pts[255].project(),
            direction: 1,
            component_id: Some(0),
            points: pts,
        }],
        visited_criticals: Vec::new(),
        closed: true,
        winding: 1,
        touch_tol: 1e-7,
    }
}

#[test]
fn fixed_circle_encloses_the_same_measure() {
    let v = measure_verdict(&middle_circle(), &ShearOnly, &|_| 1.0).unwrap();
    assert!((v.area_inside_c - 0.5).abs() < 1e-9);
    assert!(v.difference.abs() < 1e-9);
    assert!(!v.crossover_found);
}

#[test]
fn lifted_circle_gains_a_fortieth() {
    // ∫₀¹ 0.1·(1/2)(1/2) dx
    let v = measure_verdict(&middle_circle(), &Lifted, &|_| 1.0).unwrap();
    assert!((v.difference - 0.025).abs() < 1e-6, "{}", v.difference);
    assert!(v.difference > 0.0, "sign follows u = +1");
    assert!(!v.crossover_found);
    let counts = check_no_crossover(&middle_circle(), &Lifted).unwrap();
    assert_eq!(counts.inside, 0);
    assert!(counts.outside > 0);
}

#[test]
fn vertical_right_of_itself_never_crosses() {
    // Δ₁ > 0 on the whole segment: the image sits strictly to its right
    let seg: Vec<_> = (0..=100).map(|k| annulus_twist::PlanePoint::new(0.3, 0.2 + 0.006 * k as f64)).collect();
    let img: Vec<_> = seg.iter().map(|p| annulus_twist::PlanePoint::new(p.x + 0.05 + 0.01 * (PI * p.y).sin(), p.y + 0.01)).collect();
    assert_eq!(signed_crossings(&seg, &img), 0);
    assert!(img.iter().all(|q| q.x > 0.3));
}
