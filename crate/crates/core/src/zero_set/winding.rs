//! Winding numbers of closed polylines, in the plane about a point or around the annulus.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, wrap_signed, LiftPoint, PlanePoint};

/// A closed polyline; the segment from the last vertex back to the first is implicit.
pub type Polyline = [LiftPoint];

/// Net number of turns around the annulus: sum of the short-way x-steps, closing step included.
pub fn annulus_winding(poly: &Polyline) -> i64 {
    if poly.len() < 2 {
        return 0;
    }
    let mut total = 0.0;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        total += wrap_signed(b.x - a.x);
    }
    total.round() as i64
}

fn segment_distance(p: PlanePoint, a: PlanePoint, b: PlanePoint) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p.x - a.x - s * dx).hypot(p.y - a.y - s * dy)
}

/// Sum of the angle increments of the polyline seen from `about`, in turns.
pub fn planar_winding(poly: &[PlanePoint], about: PlanePoint) -> Result<i64> {
    let n = poly.len();
    if n < 2 {
        return Err(Error::InvalidArgument("polyline needs at least two vertices".into()));
    }
    let mut total = 0.0;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        if segment_distance(about, a, b) < 1e-12 {
            return Err(Error::OnCurve);
        }
        let ta = (a.y - about.y).atan2(a.x - about.x);
        let tb = (b.y - about.y).atan2(b.x - about.x);
        total += wrap_angle(tb - ta);
    }
    Ok((total / TAU).round() as i64)
}

/// Planar winding about `about` when given, otherwise the annulus winding of the lifted polyline.
pub fn winding_number(poly: &Polyline, about: Option<PlanePoint>) -> Result<i64> {
    match about {
        Some(c) => {
            let pts: Vec<PlanePoint> = poly.iter().map(|p| PlanePoint::new(p.x, p.y)).collect();
            planar_winding(&pts, c)
        }
        None => {
            if poly.len() < 2 {
                return Err(Error::InvalidArgument("polyline needs at least two vertices".into()));
            }
            Ok(annulus_winding(poly))
        }
    }
}

/// Total winding of a family of closed curves (e.g. both boundary circles of a region).
pub fn boundary_winding(curves: &[Vec<LiftPoint>]) -> i64 {
    curves.iter().map(|c| annulus_winding(c)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<PlanePoint> {
        vec![
            PlanePoint::new(1.0, -1.0),
            PlanePoint::new(1.0, 1.0),
            PlanePoint::new(-1.0, 1.0),
            PlanePoint::new(-1.0, -1.0),
        ]
    }

    #[test]
    fn unit_square_both_ways() {
        let o = PlanePoint::new(0.0, 0.0);
        assert_eq!(planar_winding(&square(), o).unwrap(), 1);
        let mut cw = square();
        cw.reverse();
        assert_eq!(planar_winding(&cw, o).unwrap(), -1);
        assert_eq!(planar_winding(&square(), PlanePoint::new(5.0, 0.0)).unwrap(), 0);
        assert!(matches!(planar_winding(&square(), PlanePoint::new(1.0, 0.3)), Err(Error::OnCurve)));
    }

    #[test]
    fn annulus_boundary_cancels() {
        let bottom: Vec<LiftPoint> = (0..16).map(|k| LiftPoint::new(k as f64 / 16.0, 0.0)).collect();
        let top: Vec<LiftPoint> = (0..16).rev().map(|k| LiftPoint::new(k as f64 / 16.0, 1.0)).collect();
        assert_eq!(annulus_winding(&bottom), 1);
        assert_eq!(annulus_winding(&top), -1);
        assert_eq!(boundary_winding(&[bottom, top]), 0);
    }
}
