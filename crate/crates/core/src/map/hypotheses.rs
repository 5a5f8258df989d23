//! Twist condition and positive-integral-invariant checks.

use rayon::prelude::*;
use serde::Serialize;

use super::{best_shift, AnnulusMap, ToleranceTier};
use crate::error::{Error, Result};
use crate::geometry::{AnnulusPoint, LiftPoint};

#[derive(Debug, Clone, Serialize)]
pub struct TwistCheck {
    pub twist_ok: bool,
    /// Largest lifted x-displacement on `y = 0`; negative for a twist map.
    pub twist_margin_bottom: f64,
    /// Smallest lifted x-displacement on `y = 1`; positive for a twist map.
    pub twist_margin_top: f64,
    /// Integer subtracted from the map's own lift before measuring.
    pub lift_shift: i64,
    pub max_boundary_deviation: f64,
    pub boundary_tol: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureCheck {
    pub measure_ok: bool,
    pub max_density_transport_error: f64,
    pub worst_point: AnnulusPoint,
    pub tolerance: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub map: String,
    pub tier: ToleranceTier,
    pub twist_ok: bool,
    pub twist_margin_bottom: f64,
    pub twist_margin_top: f64,
    pub lift_shift: i64,
    pub max_boundary_deviation: f64,
    pub boundary_tol: f64,
    pub measure_ok: bool,
    pub max_density_transport_error: f64,
    pub measure_tol: f64,
    pub twist_samples: usize,
    pub measure_samples: usize,
}

impl HypothesisReport {
    pub fn ok(&self) -> bool {
        self.twist_ok && self.measure_ok
    }
}

/// `i`-th element of the van der Corput sequence in `base` (Halton coordinate).
pub fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Quasi-random interior sample of the annulus (bases 2 and 3, skipping index 0).
pub(crate) fn halton_points(n: usize) -> Vec<AnnulusPoint> {
    (1..=n).map(|i| AnnulusPoint::new(halton(i, 2), halton(i, 3))).collect()
}

pub fn check_twist<M: AnnulusMap + ?Sized>(map: &M, n_samples: usize) -> Result<TwistCheck> {
    check_twist_with_tol(map, n_samples, map.tier().boundary_tol())
}

pub fn check_twist_with_tol<M: AnnulusMap + ?Sized>(map: &M, n_samples: usize, boundary_tol: f64) -> Result<TwistCheck> {
    if n_samples < 16 {
        return Err(Error::InvalidArgument(format!("need at least 16 samples, got {n_samples}")));
    }
    if !(boundary_tol > 0.0) {
        return Err(Error::InvalidArgument("boundary tolerance must be positive".into()));
    }
    let xs: Vec<f64> = (0..n_samples).map(|i| i as f64 / n_samples as f64).collect();
    let eval_row = |y: f64| -> Result<Vec<LiftPoint>> {
        xs.par_iter().map(|&x| map.lift_eval(LiftPoint::new(x, y))).collect()
    };
    let bottom = eval_row(0.0)?;
    let top = eval_row(1.0)?;

    let mut max_dev: f64 = 0.0;
    for (side, target, row) in [("bottom", 0.0, &bottom), ("top", 1.0, &top)] {
        for (x, p) in xs.iter().zip(row.iter()) {
            let dev = (p.y - target).abs();
            if dev > boundary_tol {
                return Err(Error::NotBoundaryPreserving { x: *x, side, deviation: dev });
            }
            max_dev = max_dev.max(dev);
        }
    }

    let disp_bottom: Vec<f64> = xs.iter().zip(&bottom).map(|(x, p)| p.x - x).collect();
    let disp_top: Vec<f64> = xs.iter().zip(&top).map(|(x, p)| p.x - x).collect();
    let all: Vec<f64> = disp_bottom.iter().chain(&disp_top).copied().collect();
    let shift = best_shift(&all);
    let k = shift as f64;
    let margin_bottom = disp_bottom.iter().map(|d| d - k).fold(f64::NEG_INFINITY, f64::max);
    let margin_top = disp_top.iter().map(|d| d - k).fold(f64::INFINITY, f64::min);
    Ok(TwistCheck {
        twist_ok: margin_bottom < 0.0 && margin_top > 0.0,
        twist_margin_bottom: margin_bottom,
        twist_margin_top: margin_top,
        lift_shift: shift,
        max_boundary_deviation: max_dev,
        boundary_tol,
        samples: n_samples,
    })
}

pub fn check_invariant_measure<M: AnnulusMap + ?Sized>(map: &M, n_samples: usize) -> Result<MeasureCheck> {
    check_invariant_measure_with_tol(map, n_samples, map.tier().measure_tol())
}

pub fn check_invariant_measure_with_tol<M: AnnulusMap + ?Sized>(
    map: &M,
    n_samples: usize,
    tol: f64,
) -> Result<MeasureCheck> {
    if n_samples < 16 {
        return Err(Error::InvalidArgument(format!("need at least 16 samples, got {n_samples}")));
    }
    let errors: Vec<(f64, AnnulusPoint)> = halton_points(n_samples)
        .into_par_iter()
        .map(|p| -> Result<(f64, AnnulusPoint)> {
            let (q, j) = map.eval_with_jacobian(p.lift())?;
            let det = j.det();
            if !(det.abs() >= 1e-12) {
                return Err(Error::SingularJacobian { x: p.x, y: p.y, det });
            }
            let rho = map.invariant_density(p);
            if !(rho > 0.0) {
                return Err(Error::InvalidArgument(format!("density {rho} is not positive at {p:?}")));
            }
            let err = (map.invariant_density(q.project()) * det.abs() - rho).abs();
            Ok((err, p))
        })
        .collect::<Result<_>>()?;
    // first maximum in sample order keeps the report deterministic
    let (worst, at) = errors
        .iter()
        .fold((0.0, errors[0].1), |acc, &(e, p)| if e > acc.0 { (e, p) } else { acc });
    Ok(MeasureCheck {
        measure_ok: worst < tol,
        max_density_transport_error: worst,
        worst_point: at,
        tolerance: tol,
        samples: n_samples,
    })
}

/// Runs both checks at the map's tier tolerances.
pub fn check_hypotheses<M: AnnulusMap + ?Sized>(map: &M, twist_samples: usize, measure_samples: usize) -> Result<HypothesisReport> {
    let t = check_twist(map, twist_samples)?;
    let m = check_invariant_measure(map, measure_samples)?;
    Ok(HypothesisReport {
        map: map.name().to_string(),
        tier: map.tier(),
        twist_ok: t.twist_ok,
        twist_margin_bottom: t.twist_margin_bottom,
        twist_margin_top: t.twist_margin_top,
        lift_shift: t.lift_shift,
        max_boundary_deviation: t.max_boundary_deviation,
        boundary_tol: t.boundary_tol,
        measure_ok: m.measure_ok,
        max_density_transport_error: m.max_density_transport_error,
        measure_tol: m.tolerance,
        twist_samples: t.samples,
        measure_samples: m.samples,
    })
}
