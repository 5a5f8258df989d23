//! Side classification of `f(C)` against a wrap-around loop `C`, and the measure comparison.

use rayon::prelude::*;
use serde::Serialize;

use super::{DirectedPath, MeasureVerdict};
use crate::error::{Error, Result};
use crate::geometry::{wrap_signed, AnnulusPoint, LiftPoint, PlanePoint};
use crate::map::AnnulusMap;

const STATIONS: usize = 1024;
const DENSIFY_STEP: f64 = 1.0 / 2048.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Inside,
    Outside,
    On,
}

/// Tally of image points by side. For a wrap-around loop "inside" is the part containing `y = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SideCounts {
    pub inside: usize,
    pub outside: usize,
    pub on: usize,
}

impl SideCounts {
    fn add(&mut self, s: Side) {
        match s {
            Side::Inside => self.inside += 1,
            Side::Outside => self.outside += 1,
            Side::On => self.on += 1,
        }
    }

    pub fn crosses(&self) -> bool {
        self.inside > 0 && self.outside > 0
    }
}

/// Subdivides every step (closing step included when `closed`) to length at most `h`.
pub fn densify(poly: &[LiftPoint], closed: bool, h: f64) -> Vec<LiftPoint> {
    let n = poly.len();
    let steps = if closed { n } else { n.saturating_sub(1) };
    let mut out = Vec::with_capacity(n * 2);
    for k in 0..steps {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let dx = if k + 1 == n { wrap_signed(b.x - a.x) } else { b.x - a.x };
        let dy = b.y - a.y;
        let m = (dx.hypot(dy) / h).ceil().max(1.0) as usize;
        for i in 0..m {
            let s = i as f64 / m as f64;
            out.push(LiftPoint::new(a.x + s * dx, a.y + s * dy));
        }
    }
    if !closed {
        if let Some(&last) = poly.last() {
            out.push(last);
        }
    }
    out
}

/// Heights where the closed polyline crosses the vertical `x` (mod 1), sorted.
///
/// Segments are half-open in `x`, so a vertex on the line is counted once when the curve passes
/// through and zero or two times when it only touches.
pub fn column_crossings(poly: &[LiftPoint], x: f64) -> Vec<f64> {
    let n = poly.len();
    let mut ys = Vec::new();
    for k in 0..n {
        let a = poly[k];
        let b_raw = poly[(k + 1) % n];
        let b = LiftPoint::new(a.x + wrap_signed(b_raw.x - a.x), b_raw.y);
        let (lo, hi) = if a.x < b.x { (a.x, b.x) } else { (b.x, a.x) };
        if hi == lo {
            continue;
        }
        let xs = x + (lo - x).ceil();
        if xs >= hi {
            continue;
        }
        let s = (xs - a.x) / (b.x - a.x);
        ys.push(a.y + s * (b.y - a.y));
    }
    ys.sort_by(f64::total_cmp);
    ys
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p.0 - a.0 - s * dx).hypot(p.1 - a.1 - s * dy)
}

fn annulus_distance(poly: &[LiftPoint], q: LiftPoint) -> f64 {
    let n = poly.len();
    let mut best = f64::INFINITY;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let bx = a.x + wrap_signed(b.x - a.x);
        let qx = a.x + wrap_signed(q.x - a.x);
        best = best.min(segment_distance((qx, q.y), (a.x, a.y), (bx, b.y)));
    }
    best
}

fn classify(poly: &[LiftPoint], q: LiftPoint, tol: f64) -> Side {
    if annulus_distance(poly, q) <= tol {
        return Side::On;
    }
    let above = column_crossings(poly, q.x).into_iter().filter(|&y| y > q.y).count();
    if above % 2 == 1 {
        Side::Inside
    } else {
        Side::Outside
    }
}

fn image_of(path: &DirectedPath, map: &dyn AnnulusMap) -> Result<(Vec<LiftPoint>, Vec<LiftPoint>)> {
    let c = path.polyline();
    if c.len() < 3 {
        return Err(Error::InvalidArgument("loop has fewer than three points".into()));
    }
    let dense = densify(&c, true, DENSIFY_STEP);
    let image: Vec<LiftPoint> = dense.par_iter().map(|&p| map.lift_eval(p)).collect::<Result<_>>()?;
    Ok((c, image))
}

/// Fails with `CrossoverDetected` when `f(C)` has points strictly on both sides of `C`, further
/// than the path's touch tolerance.
pub fn check_no_crossover(path: &DirectedPath, map: &dyn AnnulusMap) -> Result<SideCounts> {
    check_no_crossover_with_tol(path, map, path.touch_tol)
}

pub fn check_no_crossover_with_tol(path: &DirectedPath, map: &dyn AnnulusMap, tol: f64) -> Result<SideCounts> {
    if !path.closed {
        return Err(Error::InvalidArgument("crossover check needs a closed loop".into()));
    }
    let (c, image) = image_of(path, map)?;
    let counts = side_counts(&c, &image, tol);
    if counts.crosses() {
        return Err(Error::CrossoverDetected(format!(
            "image has {} point(s) inside and {} outside the loop",
            counts.inside, counts.outside
        )));
    }
    Ok(counts)
}

fn side_counts(c: &[LiftPoint], image: &[LiftPoint], tol: f64) -> SideCounts {
    let sides: Vec<Side> = image.par_iter().map(|&q| classify(c, q, tol)).collect();
    let mut counts = SideCounts::default();
    sides.into_iter().for_each(|s| counts.add(s));
    counts
}

fn column_mass(ys: &[f64], x: f64, density: &(dyn Fn(AnnulusPoint) -> f64 + Sync)) -> f64 {
    // below-set is [0, y1] ∪ [y2, y3] ∪ ...
    let mut bounds = vec![0.0];
    bounds.extend(ys.iter().map(|y| y.clamp(0.0, 1.0)));
    bounds
        .chunks(2)
        .filter(|w| w.len() == 2)
        .map(|w| simpson(|y| density(AnnulusPoint::new(x, y)), w[0], w[1]))
        .sum()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let len = b - a;
    if len <= 0.0 {
        return 0.0;
    }
    let m = 2 * ((len * 128.0).ceil() as usize).max(1);
    let h = len / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn area_below(poly: &[LiftPoint], density: &(dyn Fn(AnnulusPoint) -> f64 + Sync)) -> Result<f64> {
    let masses: Vec<f64> = (0..STATIONS)
        .into_par_iter()
        .map(|k| {
            let x = (k as f64 + 0.5) / STATIONS as f64;
            let ys = column_crossings(poly, x);
            if ys.len() % 2 == 0 {
                return Err(Error::InvalidArgument(format!("loop meets the vertical x = {x} an even number of times")));
            }
            Ok(column_mass(&ys, x, density))
        })
        .collect::<Result<_>>()?;
    Ok(masses.iter().sum::<f64>() / STATIONS as f64)
}

/// `μ` of the region below `C` and below `f(C)`, on 1024 periodic stations.
pub fn measure_verdict(
    path: &DirectedPath,
    map: &dyn AnnulusMap,
    density: &(dyn Fn(AnnulusPoint) -> f64 + Sync),
) -> Result<MeasureVerdict> {
    if !path.closed || path.winding.abs() != 1 {
        return Err(Error::InvalidArgument(format!(
            "measure comparison needs a closed loop of winding ±1, got winding {}",
            path.winding
        )));
    }
    let (c, image) = image_of(path, map)?;
    let area_c = area_below(&c, density)?;
    let area_fc = area_below(&image, density)?;
    let crossover_found = side_counts(&c, &image, path.touch_tol).crosses();
    Ok(MeasureVerdict {
        area_inside_c: area_c,
        area_inside_fc: area_fc,
        difference: area_fc - area_c,
        crossover_found,
    })
}

fn orient(a: PlanePoint, b: PlanePoint, c: PlanePoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Signed count of proper crossings of the open polyline `a` over `b`.
///
/// Both polylines use half-open segments so crossings through shared vertices count once and
/// touchings cancel.
pub fn signed_crossings(a: &[PlanePoint], b: &[PlanePoint]) -> i64 {
    let mut total = 0;
    for wa in a.windows(2) {
        for wb in b.windows(2) {
            let (p, q) = (wa[0], wa[1]);
            let (r, s) = (wb[0], wb[1]);
            let o1 = orient(r, s, p);
            let o2 = orient(r, s, q);
            let o3 = orient(p, q, r);
            let o4 = orient(p, q, s);
            // p..q half-open at q, r..s half-open at s
            let crosses_ab = (o1 >= 0.0) != (o2 >= 0.0);
            let crosses_ba = (o3 >= 0.0) != (o4 >= 0.0);
            if crosses_ab && crosses_ba {
                total += if o1 < o2 { 1 } else { -1 };
            }
        }
    }
    total
}

/// Sides of `image` points relative to an open `path` running from the border of `bbox`
/// (`[xmin, xmax, ymin, ymax]`) back to the border. The path is closed up counter-clockwise
/// along the border; points outside the box are ignored.
pub fn local_sides(path: &[PlanePoint], bbox: [f64; 4], image: &[PlanePoint], tol: f64) -> SideCounts {
    let [x0, x1, y0, y1] = bbox;
    // border parameter, counter-clockwise from the bottom-left corner
    let (w, h) = (x1 - x0, y1 - y0);
    let param = |p: PlanePoint| -> f64 {
        if (p.y - y0).abs() < 1e-12 {
            p.x - x0
        } else if (p.x - x1).abs() < 1e-12 {
            w + p.y - y0
        } else if (p.y - y1).abs() < 1e-12 {
            w + h + x1 - p.x
        } else {
            2.0 * w + h + y1 - p.y
        }
    };
    let corners = [(w, PlanePoint::new(x1, y0)), (w + h, PlanePoint::new(x1, y1)), (2.0 * w + h, PlanePoint::new(x0, y1)), (2.0 * (w + h), PlanePoint::new(x0, y0))];
    let mut poly = path.to_vec();
    let (ps, pe) = (param(path[0]), param(path[path.len() - 1]));
    let mut t = pe;
    let end = if ps > pe { ps } else { ps + 2.0 * (w + h) };
    for round in 0..2 {
        for (c, q) in corners {
            let c = c + round as f64 * 2.0 * (w + h);
            if c > t && c < end {
                poly.push(q);
                t = c;
            }
        }
    }
    let mut counts = SideCounts::default();
    for &q in image {
        if q.x <= x0 || q.x >= x1 || q.y <= y0 || q.y >= y1 {
            continue;
        }
        let d = path
            .windows(2)
            .map(|s| segment_distance((q.x, q.y), (s[0].x, s[0].y), (s[1].x, s[1].y)))
            .fold(f64::INFINITY, f64::min);
        if d <= tol {
            counts.add(Side::On);
            continue;
        }
        // even-odd ray to the right
        let n = poly.len();
        let mut inside = false;
        for k in 0..n {
            let (a, b) = (poly[k], poly[(k + 1) % n]);
            if (a.y > q.y) != (b.y > q.y) {
                let xi = a.x + (q.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if xi > q.x {
                    inside = !inside;
                }
            }
        }
        counts.add(if inside { Side::Inside } else { Side::Outside });
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn touching_vertex_counts_twice_or_never() {
        // a wrap-around polyline with a local max of x exactly on x = 0.5
        let poly = vec![
            LiftPoint::new(0.0, 0.5),
            LiftPoint::new(0.4, 0.5),
            LiftPoint::new(0.5, 0.6),
            LiftPoint::new(0.4, 0.7),
            LiftPoint::new(0.45, 0.8),
            LiftPoint::new(0.7, 0.5),
        ];
        assert_eq!(column_crossings(&poly, 0.5).len(), 1);
        assert_eq!(column_crossings(&poly, 0.2).len(), 1);
    }

    #[test]
    fn straight_crossing_signs() {
        let a = [PlanePoint::new(-1.0, 0.0), PlanePoint::new(1.0, 0.0)];
        let b = [PlanePoint::new(0.0, -1.0), PlanePoint::new(0.0, 1.0)];
        assert_eq!(signed_crossings(&a, &b).abs(), 1);
        assert_eq!(signed_crossings(&a, &b), -signed_crossings(&b, &a));
        let c = [PlanePoint::new(-1.0, 1.0), PlanePoint::new(0.0, 0.0), PlanePoint::new(1.0, 1.0)];
        assert_eq!(signed_crossings(&c, &a), 0);
    }
}
