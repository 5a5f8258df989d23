//! Critical points of `ℐ`, the directed path rules `v = -f`, `t = -u'·v·f`, closed-loop
//! detection and the measure comparison between a loop and its image.
//!
//! Everything here works in T-coordinates, where the fibres of `α` are vertical and `ℐ` is the
//! zero set of the horizontal displacement `Δ₁`.

mod cases;
mod crossing;

use serde::Serialize;

pub use cases::{
    crit_case_fixture, crit_table, path_algebra_terminal_type, vert_case_fixture, vert_table, CaseFixture,
    CritCase, Dir, VertCase,
};
pub use crossing::{
    check_no_crossover, check_no_crossover_with_tol, column_crossings, densify, local_sides, measure_verdict,
    signed_crossings, Side, SideCounts,
};

use crate::error::{Error, Result};
use crate::geometry::{wrap_signed, AnnulusPoint, LiftPoint};
use crate::map::AnnulusMap;
use crate::zero_set::{annulus_winding, Component, InvariantSet};

/// Ratio `|dx|/|ds|` below which a non-extremal vertex counts as a vertical inflection.
const INFLECTION_SLOPE: f64 = 0.05;
/// Vertical intersections closer than this to the departure point are ignored.
const SELF_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub component_id: usize,
    pub vertex_index: usize,
    pub position: AnnulusPoint,
    /// The vertex as stored on its component (unwrapped `x`).
    pub lift: LiftPoint,
    /// +1 right-facing (local maximum of `x`), -1 left-facing, 0 for a vertical inflection.
    pub c: i8,
    /// Sign of `Δ₁` on the outer side.
    pub flow: i8,
    /// Sign of `f₂ - y` on the host component, when constant.
    pub u: Option<i8>,
    pub degenerate: bool,
}

impl CriticalPoint {
    /// `T = u·c`.
    pub fn type_sign(&self) -> Option<i8> {
        self.u.map(|u| u * self.c)
    }

    fn key(&self) -> (usize, usize) {
        (self.component_id, self.vertex_index)
    }
}

fn x_at(comp: &Component, k: isize) -> f64 {
    let n = comp.len() as isize;
    let base = comp.vertices[k.rem_euclid(n) as usize].x;
    base + (comp.winding as f64) * k.div_euclid(n) as f64
}

fn vertex(comp: &Component, k: isize) -> LiftPoint {
    let n = comp.len() as isize;
    LiftPoint::new(x_at(comp, k), comp.vertices[k.rem_euclid(n) as usize].y)
}

fn seg_len(comp: &Component, k: isize) -> f64 {
    let a = vertex(comp, k);
    let b = vertex(comp, k + 1);
    (b.x - a.x).hypot(b.y - a.y)
}

/// Vertical-tangent points of a closed component.
///
/// Runs of vertices with equal `x` (grid-aligned folds) count as one candidate. A candidate is
/// non-degenerate when every other vertex within arc distance `eps_window` on both sides lies
/// strictly on one side of its vertical line. With `map` given, the outer flow is the sign of
/// `Δ₁` at a horizontal offset `eps_window/2` outward; without it, the flow is read off the
/// orientation (`{Δ₁ < 0}` lies on the right of the traversal).
pub fn find_critical_points(
    comp: &Component,
    eps_window: f64,
    map: Option<&dyn AnnulusMap>,
) -> Result<Vec<CriticalPoint>> {
    if !comp.closed {
        return Err(Error::InvalidArgument(format!("component {} is not closed", comp.id)));
    }
    let n = comp.len();
    if n < 8 {
        return Err(Error::InvalidArgument(format!("component {} has only {n} vertices", comp.id)));
    }
    if !(eps_window > 0.0) {
        return Err(Error::InvalidArgument("eps_window must be positive".into()));
    }
    let ni = n as isize;
    let eq = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let u = comp.u.value().map(|v| v as i8);

    // a start index that is not inside an equal-x run, so runs never straddle the seam
    let start = (0..ni).find(|&k| !eq(x_at(comp, k), x_at(comp, k - 1))).unwrap_or(0);

    let mut out = Vec::new();
    let mut k = start;
    while k < start + ni {
        // collapse the run [k, e]
        let mut e = k;
        while e + 1 < start + ni && eq(x_at(comp, e + 1), x_at(comp, k)) {
            e += 1;
        }
        let x0 = x_at(comp, k);
        let before = x_at(comp, k - 1) - x0;
        let after = x_at(comp, e + 1) - x0;
        let mid = (k + e) / 2;
        if before.signum() == after.signum() && before != 0.0 {
            let c: i8 = if before < 0.0 { 1 } else { -1 };
            // strictness over the window
            let mut strict = true;
            let mut dist = 0.0;
            let mut j = k - 1;
            while dist <= eps_window && j > k - ni {
                dist += seg_len(comp, j);
                if (x_at(comp, j) - x0) * c as f64 >= 0.0 {
                    strict = false;
                    break;
                }
                j -= 1;
            }
            dist = 0.0;
            j = e + 1;
            while strict && dist <= eps_window && j < e + ni {
                dist += seg_len(comp, j - 1);
                if (x_at(comp, j) - x0) * c as f64 >= 0.0 {
                    strict = false;
                    break;
                }
                j += 1;
            }
            out.push(make_critical(comp, mid, c, !strict, u, eps_window, map)?);
        } else if before != 0.0 && after != 0.0 && k == e {
            // monotone through the vertex: flag near-vertical inflections
            let a = vertex(comp, k - 1);
            let b = vertex(comp, k + 1);
            let ratio = (b.x - a.x).abs() / (b.x - a.x).hypot(b.y - a.y);
            let ratio_at = |m: isize| {
                let a = vertex(comp, m - 1);
                let b = vertex(comp, m + 1);
                (b.x - a.x).abs() / (b.x - a.x).hypot(b.y - a.y)
            };
            if ratio < INFLECTION_SLOPE && ratio <= ratio_at(k - 1) && ratio < ratio_at(k + 1) {
                out.push(make_critical(comp, k, 0, true, u, eps_window, map)?);
            }
        }
        k = e + 1;
    }
    out.sort_by_key(|c| c.vertex_index);
    if !out.iter().any(|c| !c.degenerate) {
        return Err(Error::NoCriticalPoints(comp.id));
    }
    Ok(out)
}

fn make_critical(
    comp: &Component,
    k: isize,
    c: i8,
    degenerate: bool,
    u: Option<i8>,
    eps_window: f64,
    map: Option<&dyn AnnulusMap>,
) -> Result<CriticalPoint> {
    let idx = k.rem_euclid(comp.len() as isize) as usize;
    let lift = comp.vertices[idx];
    let tau = (vertex(comp, k + 1).y - vertex(comp, k - 1).y).signum() as i8;
    let oriented = -c * tau;
    let flow = match map {
        Some(m) if c != 0 => {
            let d = m.displacement(LiftPoint::new(lift.x + c as f64 * 0.5 * eps_window, lift.y))?[0];
            if d > 0.0 {
                1
            } else if d < 0.0 {
                -1
            } else {
                oriented
            }
        }
        _ => oriented,
    };
    Ok(CriticalPoint {
        component_id: comp.id,
        vertex_index: idx,
        position: lift.project(),
        lift,
        c,
        flow,
        u,
        degenerate,
    })
}

/// Critical points of every closed component; components without any are skipped.
pub fn all_critical_points(set: &InvariantSet, eps_window: f64, map: Option<&dyn AnnulusMap>) -> Result<Vec<CriticalPoint>> {
    let mut out = Vec::new();
    for comp in set.components.iter().filter(|c| c.closed) {
        match find_critical_points(comp, eps_window, map) {
            Ok(v) => out.extend(v),
            Err(Error::NoCriticalPoints(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Default non-degeneracy window: four grid cells.
pub fn default_eps_window(set: &InvariantSet) -> f64 {
    4.0 * set.cell()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Vertical,
    AlongComponent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSegment {
    pub kind: SegmentKind,
    pub start: AnnulusPoint,
    pub end: AnnulusPoint,
    /// `v` (+1 up) for verticals, `t` (+1 right) along components.
    pub direction: i8,
    pub component_id: Option<usize>,
    /// Unwrapped geometry of the segment, start to end.
    #[serde(skip)]
    pub points: Vec<LiftPoint>,
}

impl PathSegment {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "start": [self.start.x, self.start.y],
            "end": [self.end.x, self.end.y],
            "direction": self.direction,
            "component_id": self.component_id,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectedPath {
    pub segments: Vec<PathSegment>,
    pub visited_criticals: Vec<CriticalPoint>,
    pub closed: bool,
    pub winding: i64,
    /// Image points closer than this to the loop count as touching it.
    pub touch_tol: f64,
}

/// Chords of a grid-extracted curve sit `O(cell²)` off the true curve.
pub fn touch_tolerance(set: &InvariantSet) -> f64 {
    (2.0 * set.cell() * set.cell()).max(1e-7)
}

impl DirectedPath {
    /// Concatenated unwrapped geometry (consecutive duplicates removed).
    pub fn polyline(&self) -> Vec<LiftPoint> {
        let mut out: Vec<LiftPoint> = Vec::new();
        for s in &self.segments {
            for p in &s.points {
                let q = match out.last() {
                    Some(prev) => LiftPoint::new(prev.x + wrap_signed(p.x - prev.x), p.y),
                    None => *p,
                };
                if out.last().is_none_or(|prev| (prev.x - q.x).hypot(prev.y - q.y) > 1e-14) {
                    out.push(q);
                }
            }
        }
        if self.closed && out.len() > 1 {
            let (a, b) = (out[0], out[out.len() - 1]);
            if wrap_signed(a.x - b.x).hypot(a.y - b.y) < 1e-14 {
                out.pop();
            }
        }
        out
    }

    /// Component ids of the along-component segments, in order.
    pub fn component_sequence(&self) -> Vec<usize> {
        self.segments.iter().filter_map(|s| s.component_id).collect()
    }

    pub fn segments_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.segments.iter().map(|s| s.to_json()).collect())
    }
}

struct Hit {
    component: usize,
    /// Segment from vertex `seg` to `seg + 1`.
    seg: usize,
    y: f64,
}

/// First crossing of the vertical through `(x0, y0)` in direction `v` with `ℐ`.
fn vertical_hit(set: &InvariantSet, x0: f64, y0: f64, v: i8, from: (usize, usize)) -> Result<Hit> {
    let mut best: Option<Hit> = None;
    let mut spans_any = false;
    for comp in set.components.iter().filter(|c| c.closed) {
        let n = comp.len();
        for j in 0..n {
            let a = vertex(comp, j as isize);
            let b = vertex(comp, j as isize + 1);
            let (lo, hi) = (a.x.min(b.x), a.x.max(b.x));
            // bring x0 into this segment's lift
            let xs = x0 + (lo - x0).ceil();
            if xs > hi || hi == lo {
                continue;
            }
            let s = (xs - a.x) / (b.x - a.x);
            let y = a.y + s * (b.y - a.y);
            let own = comp.id == from.0 && (j == from.1 || (j + 1) % n == from.1);
            if own && (y - y0).abs() < 1e-6 {
                continue;
            }
            spans_any = true;
            let dy = (y - y0) * v as f64;
            if dy <= SELF_GAP {
                continue;
            }
            let better = match &best {
                None => true,
                Some(h) => {
                    let bd = (h.y - y0) * v as f64;
                    dy < bd - 1e-9 || ((dy - bd).abs() <= 1e-9 && comp.id < h.component)
                }
            };
            if better {
                best = Some(Hit { component: comp.id, seg: j, y });
            }
        }
    }
    match best {
        Some(h) => Ok(h),
        None if spans_any => Err(Error::HitBoundary { x: crate::geometry::wrap01(x0), y: y0 }),
        None => Err(Error::NoIntersection { x: crate::geometry::wrap01(x0), y: y0 }),
    }
}

/// One leg of the path machine: vertical from `start` in `v = -flow`, then along the component
/// hit in `t = -u'·v·flow` up to its next non-degenerate critical point.
pub fn generate_path(start: &CriticalPoint, set: &InvariantSet, criticals: &[CriticalPoint]) -> Result<DirectedPath> {
    if start.degenerate || start.type_sign() != Some(1) {
        return Err(Error::InvalidArgument("paths start at non-degenerate critical points of type +1".into()));
    }
    if let Some(c) = set.components.iter().find(|c| c.closed && c.u.value().is_none()) {
        return Err(Error::MixedComponent(c.id));
    }
    let v = -start.flow;
    let hit = vertical_hit(set, start.lift.x, start.lift.y, v, start.key())?;
    let comp = set
        .component(hit.component)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown component {}", hit.component)))?;
    let u2 = comp.u.value().ok_or(Error::MixedComponent(comp.id))? as i8;
    let t = -u2 * v * start.flow;

    let vertical = PathSegment {
        kind: SegmentKind::Vertical,
        start: start.position,
        end: LiftPoint::new(start.lift.x, hit.y).project(),
        direction: v,
        component_id: None,
        points: vec![start.lift, LiftPoint::new(start.lift.x, hit.y)],
    };

    // walk the hit component in the direction that moves x towards t
    let n = comp.len() as isize;
    let j = hit.seg as isize;
    let slope = x_at(comp, j + 1) - x_at(comp, j);
    let slope = if slope != 0.0 { slope } else { x_at(comp, j + 2) - x_at(comp, j - 1) };
    let dir: isize = if slope * t as f64 > 0.0 { 1 } else { -1 };
    let mut k = if dir == 1 { j + 1 } else { j };
    let lookup = |idx: usize| {
        criticals
            .iter()
            .find(|c| c.component_id == comp.id && c.vertex_index == idx && !c.degenerate)
    };
    let mut pts = vec![LiftPoint::new(start.lift.x, hit.y)];
    // shift the component's lift to continue from the hit point
    let offset = {
        let a = vertex(comp, j);
        (start.lift.x - a.x - wrap_signed(start.lift.x - a.x)).round()
    };
    let mut terminal = None;
    for _ in 0..=n {
        let p = vertex(comp, k);
        pts.push(LiftPoint::new(p.x + offset, p.y));
        if let Some(c) = lookup(k.rem_euclid(n) as usize) {
            terminal = Some(*c);
            break;
        }
        k += dir;
    }
    let terminal = terminal.ok_or(Error::NoCriticalPoints(comp.id))?;
    if terminal.c != t {
        return Err(Error::CrossoverDetected(format!(
            "travelling {} along component {} reached a {}-facing critical point",
            if t > 0 { "right" } else { "left" },
            comp.id,
            if terminal.c > 0 { "right" } else { "left" }
        )));
    }
    let along = PathSegment {
        kind: SegmentKind::AlongComponent,
        start: vertical.end,
        end: terminal.position,
        direction: t,
        component_id: Some(comp.id),
        points: pts,
    };
    Ok(DirectedPath {
        segments: vec![vertical, along],
        visited_criticals: vec![*start, terminal],
        closed: false,
        winding: 0,
        touch_tol: touch_tolerance(set),
    })
}

/// Chains path legs from type-+1 critical points until one repeats and returns the cycle.
///
/// A wrap-around component without non-degenerate critical points is itself returned as the
/// loop (it bounds a sub-annulus directly).
pub fn find_closed_loop(set: &InvariantSet, criticals: &[CriticalPoint]) -> Result<DirectedPath> {
    if let Some(c) = set.components.iter().find(|c| c.closed && c.u.value().is_none()) {
        return Err(Error::MixedComponent(c.id));
    }
    let has_nondegenerate = |id: usize| criticals.iter().any(|c| c.component_id == id && !c.degenerate);
    if let Some(comp) = set.components.iter().find(|c| c.closed && c.winding != 0 && !has_nondegenerate(c.id)) {
        let mut pts = comp.vertices.clone();
        pts.push(LiftPoint::new(pts[0].x + comp.winding as f64, pts[0].y));
        let seg = PathSegment {
            kind: SegmentKind::AlongComponent,
            start: comp.vertices[0].project(),
            end: comp.vertices[0].project(),
            direction: comp.winding.signum() as i8,
            component_id: Some(comp.id),
            points: pts,
        };
        return Ok(DirectedPath { segments: vec![seg], visited_criticals: vec![], closed: true, winding: comp.winding, touch_tol: touch_tolerance(set) });
    }

    let mut starts: Vec<&CriticalPoint> = criticals.iter().filter(|c| !c.degenerate && c.type_sign() == Some(1)).collect();
    starts.sort_by_key(|c| c.key());
    let first = *starts.first().ok_or(Error::NoCriticalPoints(set.components.first().map_or(0, |c| c.id)))?;

    let mut legs: Vec<DirectedPath> = Vec::new();
    let mut seen: Vec<(usize, usize)> = vec![first.key()];
    let mut cur = *first;
    for _ in 0..=starts.len() {
        let leg = generate_path(&cur, set, criticals)?;
        let next = leg.visited_criticals[1];
        legs.push(leg);
        if let Some(pos) = seen.iter().position(|k| *k == next.key()) {
            let cycle: Vec<DirectedPath> = legs.split_off(pos);
            let mut segments = Vec::new();
            let mut visited = vec![cycle[0].visited_criticals[0]];
            for l in &cycle {
                segments.extend(l.segments.iter().cloned());
                visited.push(l.visited_criticals[1]);
            }
            let mut path = DirectedPath {
                segments,
                visited_criticals: visited,
                closed: true,
                winding: 0,
                touch_tol: touch_tolerance(set),
            };
            path.winding = annulus_winding(&path.polyline());
            if path.winding == 0 {
                return Err(Error::ZeroWindingLoop);
            }
            return Ok(path);
        }
        seen.push(next.key());
        cur = next;
    }
    Err(Error::InvalidArgument("path sequence did not close; critical points are inconsistent".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureVerdict {
    pub area_inside_c: f64,
    pub area_inside_fc: f64,
    /// `area_inside_fc - area_inside_c`.
    pub difference: f64,
    pub crossover_found: bool,
}
