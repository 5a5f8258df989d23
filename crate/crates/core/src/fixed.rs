//! Fixed points on `ℐ`, their indices, and the ball-excision audit for a second fixed point.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{wrap_signed, AnnulusPoint, Jacobian2, LiftPoint};
use crate::map::{AnnulusMap, SharedMap, ToleranceTier};
use crate::path::{
    all_critical_points, default_eps_window, find_closed_loop, find_critical_points, measure_verdict,
};
use crate::zero_set::{annulus_winding, extract_conjugated, t_apply, t_invert, Component, InvariantSet, USign};

const WHOLE_FIXED_TOL: f64 = 1e-9;
const WHOLE_FIXED_FRACTION: f64 = 0.99;
const MERGE_TOL: f64 = 1e-6;
const INDEX_RADIUS: f64 = 1e-3;
const INDEX_SAMPLES: usize = 64;
const NEWTON_ITERS: usize = 40;
const CLASS_TOL: f64 = 1e-6;
const EXTRACTION_RETRIES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedClass {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

/// Eigenvalue type of `Df` from the discriminant `tr² - 4 det`.
pub fn classify_fixed(j: &Jacobian2) -> FixedClass {
    let disc = j.trace() * j.trace() - 4.0 * j.det();
    if disc.abs() < CLASS_TOL {
        FixedClass::Parabolic
    } else if disc < 0.0 {
        FixedClass::Elliptic
    } else {
        FixedClass::Hyperbolic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointRecord {
    pub position: AnnulusPoint,
    pub residual: f64,
    pub index: i32,
    /// Whether the index agrees on circles of half and double the radius.
    pub index_stable: bool,
    pub component_id: usize,
    pub multiplier_trace: f64,
    pub class: FixedClass,
}

impl FixedPointRecord {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "position": [self.position.x, self.position.y],
            "residual": self.residual,
            "index": self.index,
            "class": self.class,
            "component_id": self.component_id,
        })
    }
}

/// Accepted Newton residual for a tier (chart maps carry interpolation noise).
pub fn residual_tol(tier: ToleranceTier) -> f64 {
    match tier {
        ToleranceTier::Chart => 1e-8,
        _ => 1e-10,
    }
}

fn residual(map: &dyn AnnulusMap, p: LiftPoint) -> Result<f64> {
    let d = map.displacement(p)?;
    Ok(d[0].hypot(d[1]))
}

/// Damped Newton on `f(p) - p` with Jacobian `Df - I`.
pub fn newton_fixed_point(map: &dyn AnnulusMap, seed: LiftPoint) -> Result<LiftPoint> {
    let tol = residual_tol(map.tier());
    let mut p = seed;
    let mut r = residual(map, p)?;
    for _ in 0..NEWTON_ITERS {
        if r < tol * 1e-2 {
            break;
        }
        let (q, j) = map.eval_with_jacobian(p)?;
        let g = [q.x - p.x, q.y - p.y];
        let step = j
            .minus_identity()
            .solve([-g[0], -g[1]], 1e-14)
            .ok_or_else(|| Error::NewtonDiverged(format!("singular Df - I at ({}, {})", p.x, p.y)))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let cand = LiftPoint::new(p.x + lambda * step[0], (p.y + lambda * step[1]).clamp(0.0, 1.0));
            let rc = residual(map, cand)?;
            if rc < r {
                p = cand;
                r = rc;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r < tol {
        Ok(p)
    } else {
        Err(Error::NewtonDiverged(format!("residual {r:e} from seed ({}, {})", seed.x, seed.y)))
    }
}

/// Degree of `f - id` on a circle of radius `r` about `p`.
pub fn fixed_point_index(map: &dyn AnnulusMap, p: LiftPoint, r: f64, samples: usize) -> Result<i32> {
    let angles: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / samples as f64;
            let d = map.displacement(LiftPoint::new(p.x + r * a.cos(), p.y + r * a.sin()))?;
            Ok(d[1].atan2(d[0]))
        })
        .collect::<Result<_>>()?;
    let total: f64 = (0..samples)
        .map(|k| crate::geometry::wrap_angle(angles[(k + 1) % samples] - angles[k]))
        .sum();
    Ok((total / std::f64::consts::TAU).round() as i32)
}

fn record_at(map: &dyn AnnulusMap, p: LiftPoint, component_id: usize) -> Result<FixedPointRecord> {
    let (_, j) = map.eval_with_jacobian(p)?;
    let index = fixed_point_index(map, p, INDEX_RADIUS, INDEX_SAMPLES)?;
    let half = fixed_point_index(map, p, 0.5 * INDEX_RADIUS, INDEX_SAMPLES)?;
    let double = fixed_point_index(map, p, 2.0 * INDEX_RADIUS, INDEX_SAMPLES)?;
    Ok(FixedPointRecord {
        position: p.project(),
        residual: residual(map, p)?,
        index,
        index_stable: index == half && index == double,
        component_id,
        multiplier_trace: j.trace(),
        class: classify_fixed(&j),
    })
}

/// Fixed points on one component: sign changes of `f₂ - y` along the polyline, each refined
/// by Newton from the linear-interpolation root of the bracket.
///
/// `map` must be the map whose horizontal displacement vanishes on `comp` (T-coordinates).
pub fn fixed_points_on_component(comp: &Component, map: &dyn AnnulusMap) -> Result<Vec<FixedPointRecord>> {
    let n = comp.len();
    if n < 2 {
        return Ok(Vec::new());
    }
    let d = &comp.vertical_disp;
    let small = d.iter().filter(|v| v.abs() < WHOLE_FIXED_TOL).count();
    if small as f64 >= WHOLE_FIXED_FRACTION * n as f64 {
        let flat = comp
            .vertices
            .par_iter()
            .map(|v| residual(map, *v))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .filter(|r| *r < WHOLE_FIXED_TOL)
            .count();
        if flat as f64 >= WHOLE_FIXED_FRACTION * n as f64 {
            return Err(Error::WholeComponentFixed(comp.id));
        }
    }
    let steps = if comp.closed { n } else { n - 1 };
    let mut seeds = Vec::new();
    for k in 0..steps {
        let (a, b) = (comp.vertices[k], comp.vertices[(k + 1) % n]);
        let b = LiftPoint::new(a.x + wrap_signed(b.x - a.x), b.y);
        let (da, db) = (d[k], d[(k + 1) % n]);
        if da == 0.0 {
            seeds.push((a, a, b));
        } else if da * db < 0.0 {
            let s = da / (da - db);
            seeds.push((LiftPoint::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)), a, b));
        }
    }
    let found: Vec<Option<LiftPoint>> = seeds
        .par_iter()
        .map(|&(seed, a, b)| match newton_fixed_point(map, seed) {
            Ok(p) => Ok(Some(p)),
            Err(Error::NewtonDiverged(_)) => {
                // subdivide the bracket once
                for s in [0.25, 0.75] {
                    let q = LiftPoint::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y));
                    if let Ok(p) = newton_fixed_point(map, q) {
                        return Ok(Some(p));
                    }
                }
                Err(Error::NewtonDiverged(format!(
                    "no fixed point near ({}, {}) on component {}",
                    seed.x, seed.y, comp.id
                )))
            }
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut points: Vec<LiftPoint> = Vec::new();
    for p in found.into_iter().flatten() {
        if !points.iter().any(|q| q.project().distance(&p.project()) < MERGE_TOL) {
            points.push(p);
        }
    }
    points.par_iter().map(|p| record_at(map, *p, comp.id)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointScan {
    /// Positions in the map's own coordinates.
    pub records: Vec<FixedPointRecord>,
    /// Components of `ℐ` on which the map is the identity.
    pub fixed_curves: Vec<usize>,
    /// `ℐ` in T-coordinates.
    #[serde(skip)]
    pub invariant_set: InvariantSet,
    pub phi: f64,
}

impl FixedPointScan {
    pub fn index_sum(&self) -> i32 {
        self.records.iter().map(|r| r.index).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "phi": self.phi,
            "n_fixed_points": self.records.len(),
            "index_sum": self.index_sum(),
            "fixed_curves": self.fixed_curves,
            "records": self.records.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        })
    }
}

/// Conjugate, extract `ℐ`, scan every component and map the records back.
///
/// With fewer than two fixed points and every component monotone, the path machine is run and
/// its loop returned as a `TheoremViolationWitness`.
pub fn find_all_fixed_points(map: SharedMap, phi: f64, resolution: (usize, usize)) -> Result<FixedPointScan> {
    let (set, g) = extract_conjugated(map.clone(), phi, resolution.0, resolution.1, EXTRACTION_RETRIES)?;
    let phi = set.phi;
    let mut records: Vec<FixedPointRecord> = Vec::new();
    let mut fixed_curves = Vec::new();
    for comp in &set.components {
        match fixed_points_on_component(comp, g.as_ref()) {
            Ok(rs) => {
                for r in rs {
                    let p = t_invert(r.position.lift(), phi);
                    let rec = FixedPointRecord { position: p.project(), residual: residual(map.as_ref(), p)?, ..r };
                    if !records.iter().any(|q| q.position.distance(&rec.position) < MERGE_TOL) {
                        records.push(rec);
                    }
                }
            }
            Err(Error::WholeComponentFixed(id)) => fixed_curves.push(id),
            Err(e) => return Err(e),
        }
    }
    records.sort_by(|a, b| {
        (a.position.x, a.position.y)
            .partial_cmp(&(b.position.x, b.position.y))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if records.len() < 2 && fixed_curves.is_empty() {
        if set.components.iter().all(|c| c.u != USign::Mixed) {
            let criticals = all_critical_points(&set, default_eps_window(&set), Some(g.as_ref()))?;
            let path = find_closed_loop(&set, &criticals)?;
            let verdict = measure_verdict(&path, g.as_ref(), &|p| g.invariant_density(p))?;
            return Err(Error::TheoremViolationWitness(Box::new(verdict)));
        }
        return Err(Error::TooFewFixedPoints { found: records.len() });
    }
    Ok(FixedPointScan { records, fixed_curves, invariant_set: set, phi })
}

/// `ℐ` with a ball removed and every cut piece closed by a chord.
#[derive(Debug, Clone)]
pub struct ExcisedSet {
    pub set: InvariantSet,
    /// Ball centre and radius, in the coordinates of `set`.
    pub center: LiftPoint,
    pub radius: f64,
    /// Indices of chord vertices per component (only C⁰ there).
    pub chord_vertices: Vec<Vec<usize>>,
    /// Ids (in the input set) of components that met the ball.
    pub cut_components: Vec<usize>,
}

fn ball_distance(p: LiftPoint, c: LiftPoint) -> f64 {
    wrap_signed(p.x - c.x).hypot(p.y - c.y)
}

/// Point where the segment `a → b` crosses the circle (a inside-outside transition).
fn circle_crossing(a: LiftPoint, b: LiftPoint, c: LiftPoint, r: f64) -> LiftPoint {
    let ax = c.x + wrap_signed(a.x - c.x);
    let bx = ax + (b.x - a.x);
    let (dx, dy) = (bx - ax, b.y - a.y);
    let (fx, fy) = (ax - c.x, a.y - c.y);
    let qa = dx * dx + dy * dy;
    let qb = 2.0 * (fx * dx + fy * dy);
    let qc = fx * fx + fy * fy - r * r;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
    let s1 = (-qb - disc) / (2.0 * qa);
    let s2 = (-qb + disc) / (2.0 * qa);
    let s = if (0.0..=1.0).contains(&s1) { s1 } else { s2.clamp(0.0, 1.0) };
    LiftPoint::new(a.x + s * dx, a.y + s * dy)
}

/// Removes `B_r(center)` from `ℐ` and closes each remaining arc with a straight chord from its
/// end back to its start (arcs are paired with themselves). `map` supplies `f₂ - y` at the new
/// vertices.
pub fn excise_and_complete(set: &InvariantSet, map: &dyn AnnulusMap, center: LiftPoint, radius: f64) -> Result<ExcisedSet> {
    if !(radius > 0.0) || center.y - radius <= 0.0 || center.y + radius >= 1.0 {
        return Err(Error::InvalidArgument(format!("ball of radius {radius} at y = {} meets the boundary", center.y)));
    }
    let chord_step = set.cell();
    let mut comps = Vec::new();
    let mut chords = Vec::new();
    let mut cut = Vec::new();
    let mut next_id = 0;
    for comp in &set.components {
        let n = comp.len();
        let inside: Vec<bool> = comp.vertices.iter().map(|v| ball_distance(*v, center) < radius).collect();
        if !inside.iter().any(|b| *b) {
            comps.push(Component { id: next_id, ..comp.clone() });
            chords.push(Vec::new());
            next_id += 1;
            continue;
        }
        cut.push(comp.id);
        if inside.iter().all(|b| *b) {
            continue;
        }
        let steps = if comp.closed { n } else { n - 1 };
        let transitions = (0..steps).filter(|&k| inside[k] != inside[(k + 1) % n]).count();
        if transitions % 2 == 1 {
            return Err(Error::OddIntersection(transitions));
        }
        // start scanning just after an exit so every arc is contiguous
        let start = (0..n).find(|&k| inside[k] && !inside[(k + 1) % n]).map_or(0, |k| k + 1);
        let mut arc: Vec<LiftPoint> = Vec::new();
        let mut arc_disp: Vec<f64> = Vec::new();
        let mut k = start;
        for _ in 0..n {
            let i = k % n;
            let j = (k + 1) % n;
            let prev = comp.vertices[(k + n - 1) % n];
            let v = comp.vertices[i];
            if !inside[i] {
                if arc.is_empty() {
                    let entry = circle_crossing(v, LiftPoint::new(v.x + wrap_signed(prev.x - v.x), prev.y), center, radius);
                    arc.push(entry);
                    arc_disp.push(f64::NAN);
                }
                let last = arc.last().copied().unwrap_or(v);
                arc.push(LiftPoint::new(last.x + wrap_signed(v.x - last.x), v.y));
                arc_disp.push(comp.vertical_disp[i]);
                if inside[j] {
                    let exit = circle_crossing(v, LiftPoint::new(v.x + wrap_signed(comp.vertices[j].x - v.x), comp.vertices[j].y), center, radius);
                    let last = arc[arc.len() - 1];
                    arc.push(LiftPoint::new(last.x + wrap_signed(exit.x - last.x), exit.y));
                    arc_disp.push(f64::NAN);
                    let (c, ch) = close_with_chord(next_id, arc, arc_disp, chord_step, map)?;
                    comps.push(c);
                    chords.push(ch);
                    next_id += 1;
                    arc = Vec::new();
                    arc_disp = Vec::new();
                }
            }
            k += 1;
        }
    }
    Ok(ExcisedSet {
        set: InvariantSet { components: comps, ..set.clone() },
        center,
        radius,
        chord_vertices: chords,
        cut_components: cut,
    })
}

fn close_with_chord(
    id: usize,
    mut arc: Vec<LiftPoint>,
    mut disp: Vec<f64>,
    step: f64,
    map: &dyn AnnulusMap,
) -> Result<(Component, Vec<usize>)> {
    let first = arc[0];
    let last = arc[arc.len() - 1];
    let dx = wrap_signed(first.x - last.x);
    let dy = first.y - last.y;
    let m = (dx.hypot(dy) / step).ceil().max(1.0) as usize;
    let mut chord = vec![0, arc.len() - 1];
    for i in 1..m {
        let s = i as f64 / m as f64;
        chord.push(arc.len());
        arc.push(LiftPoint::new(last.x + s * dx, last.y + s * dy));
        disp.push(f64::NAN);
    }
    for (i, d) in disp.iter_mut().enumerate() {
        if d.is_nan() {
            *d = map.displacement(arc[i])?[1];
        }
    }
    let on_curve: Vec<f64> = disp.iter().enumerate().filter(|(i, _)| !chord.contains(i)).map(|(_, d)| *d).collect();
    let u = match (on_curve.iter().any(|d| *d > 0.0), on_curve.iter().any(|d| *d < 0.0)) {
        (true, false) => USign::Positive,
        (false, true) => USign::Negative,
        _ => USign::Mixed,
    };
    let winding = annulus_winding(&arc);
    chord.sort_unstable();
    Ok((Component { id, vertices: arc, closed: true, winding, u, vertical_disp: disp, min_grad: f64::NAN }, chord))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BallCase {
    /// Some component of nonzero winding misses the ball.
    Disjoint,
    /// Some component of nonzero winding only touches the ball.
    Tangential,
    /// Some component of nonzero winding meets the ball twice, winding in between.
    TwiceAfterWinding,
    /// None of the three was observed at this radius.
    Unresolved,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcisionAudit {
    pub center: FixedPointRecord,
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub mu_ball: f64,
    pub verdict: bool,
    pub strip: [f64; 2],
    pub ball_case: BallCase,
}

impl ExcisionAudit {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "epsilon": self.epsilon,
            "K": self.k,
            "M": self.m,
            "mu_ball": self.mu_ball,
            "verdict": self.verdict,
            "strip": self.strip,
            "ball_case": self.ball_case,
            "center": [self.center.position.x, self.center.position.y],
        })
    }
}

/// `sup |det Df|` over the cell centres of an `n × n` grid.
pub fn sup_abs_det(map: &dyn AnnulusMap, n: usize) -> Result<f64> {
    let dets: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let p = AnnulusPoint::new(((k % n) as f64 + 0.5) / n as f64, ((k / n) as f64 + 0.5) / n as f64);
            Ok(map.jacobian(p)?.det().abs())
        })
        .collect::<Result<_>>()?;
    Ok(dets.into_iter().fold(0.0, f64::max))
}

/// `∫_{B_r(c)} ρ` by Gauss–Legendre in the radius and the trapezoid rule in the angle.
pub fn ball_measure(density: &(dyn Fn(AnnulusPoint) -> f64 + Sync), center: LiftPoint, r: f64) -> f64 {
    // 8-point Gauss–Legendre on [0, 1]
    const NODES: [f64; 8] = [
        0.019855071751231856, 0.10166676129318664, 0.2372337950418355, 0.4082826787521751,
        0.5917173212478249, 0.7627662049581645, 0.8983332387068134, 0.9801449282487681,
    ];
    const WEIGHTS: [f64; 8] = [
        0.05061426814518813, 0.11119051722668724, 0.15685332293894363, 0.18134189168918100,
        0.18134189168918100, 0.15685332293894363, 0.11119051722668724, 0.05061426814518813,
    ];
    let n_theta = 128;
    let mut total = 0.0;
    for (t, w) in NODES.iter().zip(WEIGHTS) {
        let rho = t * r;
        let ring: f64 = (0..n_theta)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n_theta as f64;
                density(LiftPoint::new(center.x + rho * a.cos(), center.y + rho * a.sin()).project())
            })
            .sum::<f64>()
            * std::f64::consts::TAU
            / n_theta as f64;
        total += w * r * rho * ring;
    }
    total
}

/// `x`-values that a strip must avoid: vertical tangents (degenerate or not) and chord ends.
fn forbidden_x(ex: &ExcisedSet) -> Result<Vec<f64>> {
    let eps = 4.0 * ex.set.cell();
    let mut xs = Vec::new();
    for (comp, chord) in ex.set.components.iter().zip(&ex.chord_vertices) {
        if !comp.closed || comp.len() < 8 {
            continue;
        }
        match find_critical_points(comp, eps, None) {
            Ok(cps) => xs.extend(cps.iter().map(|c| crate::geometry::wrap01(c.lift.x))),
            Err(Error::NoCriticalPoints(_)) => {}
            Err(e) => return Err(e),
        }
        // any x-extremum, even a discretisation wiggle, disqualifies its column
        let n = comp.len();
        for k in 0..n {
            let a = comp.vertices[(k + n - 1) % n].x;
            let b = comp.vertices[k].x;
            let c = comp.vertices[(k + 1) % n].x;
            if wrap_signed(b - a) * wrap_signed(c - b) <= 0.0 {
                xs.push(crate::geometry::wrap01(b));
            }
        }
        xs.extend(chord.iter().map(|&i| crate::geometry::wrap01(comp.vertices[i].x)));
    }
    Ok(xs)
}

/// Largest critical-point-free interval of `x` outside the ball's shadow, shrunk to its middle
/// half. Returned as `[x_min, x_max]` with `x_min ∈ [0, 1)`.
pub fn critical_free_strip(ex: &ExcisedSet) -> Result<[f64; 2]> {
    let mut xs = forbidden_x(ex)?;
    // the ball's shadow as a dense run of forbidden points
    let m = 64;
    for i in 0..=m {
        xs.push(crate::geometry::wrap01(ex.center.x - ex.radius + 2.0 * ex.radius * i as f64 / m as f64));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut best = (0.0, 0.0);
    for i in 0..xs.len() {
        let a = xs[i];
        let b = if i + 1 < xs.len() { xs[i + 1] } else { xs[0] + 1.0 };
        if b - a > best.1 - best.0 {
            best = (a, b);
        }
    }
    let gap = best.1 - best.0;
    if gap < 1e-6 {
        return Err(Error::NoCriticalFreeStrip);
    }
    let mid = 0.5 * (best.0 + best.1);
    let half = 0.25 * gap;
    Ok([crate::geometry::wrap01(mid - half), crate::geometry::wrap01(mid - half) + 2.0 * half])
}

/// Least `μ`-area between a piece of `ℐ ∩ (J × (0,1))` and its image.
pub fn strip_area_bound(
    ex: &ExcisedSet,
    map: &dyn AnnulusMap,
    strip: [f64; 2],
    stations: usize,
) -> Result<f64> {
    let density = |p: AnnulusPoint| map.invariant_density(p);
    let width = (strip[1] - strip[0]) / stations as f64;
    let columns: Vec<Vec<f64>> = (0..stations)
        .into_par_iter()
        .map(|k| {
            let x = strip[0] + (k as f64 + 0.5) * width;
            let mut ys: Vec<f64> = Vec::new();
            for comp in ex.set.components.iter().filter(|c| c.closed) {
                ys.extend(crate::path::column_crossings(&comp.vertices, x));
            }
            ys.sort_by(f64::total_cmp);
            ys.iter()
                .map(|&y| {
                    let d = map.displacement(LiftPoint::new(x, y))?[1];
                    Ok(column_integral(&density, x, y, y + d).abs())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let pieces = columns[0].len();
    if pieces == 0 {
        return Err(Error::InvalidArgument("no component crosses the strip".into()));
    }
    if columns.iter().any(|c| c.len() != pieces) {
        return Err(Error::InvalidArgument("strip contains a vertical tangent".into()));
    }
    Ok((0..pieces)
        .map(|r| columns.iter().map(|c| c[r]).sum::<f64>() * width)
        .fold(f64::INFINITY, f64::min))
}

fn column_integral(density: &dyn Fn(AnnulusPoint) -> f64, x: f64, a: f64, b: f64) -> f64 {
    let m = 16;
    let h = (b - a) / m as f64;
    let mut s = density(AnnulusPoint::new(x, a)) + density(AnnulusPoint::new(x, b.clamp(0.0, 1.0)));
    for i in 1..m {
        let y = (a + i as f64 * h).clamp(0.0, 1.0);
        s += density(AnnulusPoint::new(x, y)) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn ball_case(set: &InvariantSet, ex: &ExcisedSet) -> BallCase {
    let touch = 2.0 * set.cell() * set.cell();
    let wound = |c: &Component| c.closed && c.winding != 0;
    for comp in set.components.iter().filter(|c| wound(c)) {
        if ex.cut_components.contains(&comp.id) {
            continue;
        }
        let gap = comp.vertices.iter().map(|v| ball_distance(*v, ex.center)).fold(f64::INFINITY, f64::min) - ex.radius;
        return if gap < touch { BallCase::Tangential } else { BallCase::Disjoint };
    }
    let completed_wound = ex
        .set
        .components
        .iter()
        .zip(&ex.chord_vertices)
        .any(|(c, ch)| !ch.is_empty() && c.winding != 0);
    if completed_wound {
        BallCase::TwiceAfterWinding
    } else {
        BallCase::Unresolved
    }
}

/// Audit inputs that do not depend on the ball radius.
pub struct AuditContext {
    pub map: SharedMap,
    pub g: SharedMap,
    pub set: InvariantSet,
    pub phi: f64,
    pub m: f64,
}

impl AuditContext {
    pub fn new(map: SharedMap, phi: f64, resolution: (usize, usize), det_grid: usize) -> Result<Self> {
        let (set, g) = extract_conjugated(map.clone(), phi, resolution.0, resolution.1, EXTRACTION_RETRIES)?;
        let m = sup_abs_det(map.as_ref(), det_grid)?;
        Ok(AuditContext { map, g, phi: set.phi, set, m })
    }

    /// One audit at radius `epsilon`; with `strip` given the strip is reused (so `K` stays fixed).
    pub fn audit(&self, center: &FixedPointRecord, epsilon: f64, strip: Option<[f64; 2]>) -> Result<ExcisionAudit> {
        let c = t_apply(center.position.lift(), self.phi);
        let ex = excise_and_complete(&self.set, self.g.as_ref(), c, epsilon)?;
        let strip = match strip {
            Some(s) => s,
            None => critical_free_strip(&ex)?,
        };
        let k = strip_area_bound(&ex, self.g.as_ref(), strip, 256)?;
        let mu_ball = ball_measure(&|p| self.g.invariant_density(p), c, epsilon);
        Ok(ExcisionAudit {
            center: *center,
            epsilon,
            k,
            m: self.m,
            mu_ball,
            verdict: mu_ball * self.m < k,
            strip: [
                t_invert(LiftPoint::new(strip[0], 0.0), self.phi).x,
                t_invert(LiftPoint::new(strip[1], 0.0), self.phi).x,
            ],
            ball_case: ball_case(&self.set, &ex),
        })
    }

    /// Halves the radius from `epsilon0` until the verdict holds, keeping the first strip.
    pub fn audit_halving(&self, center: &FixedPointRecord, epsilon0: f64, max_halvings: usize) -> Result<Vec<ExcisionAudit>> {
        let first = self.audit(center, epsilon0, None)?;
        let strip_t = {
            let a = t_apply(LiftPoint::new(first.strip[0], 0.0), self.phi).x;
            let b = t_apply(LiftPoint::new(first.strip[1], 0.0), self.phi).x;
            [a, b]
        };
        let mut out = vec![first];
        let mut eps = epsilon0;
        while !out.last().is_some_and(|a| a.verdict) && out.len() <= max_halvings {
            eps *= 0.5;
            out.push(self.audit(center, eps, Some(strip_t))?);
        }
        Ok(out)
    }
}

/// Single audit at radius `epsilon` about `center`.
pub fn audit_second_fixed_point(
    map: SharedMap,
    phi: f64,
    center: &FixedPointRecord,
    epsilon: f64,
    resolution: (usize, usize),
) -> Result<ExcisionAudit> {
    AuditContext::new(map, phi, resolution, 256)?.audit(center, epsilon, None)
}
