//! Annulus maps: the evaluation trait, lift normalisation and the named catalog.

mod catalog;
mod hypotheses;


use std::sync::Arc;

pub use catalog::{
    catalog, BumpDrift, CatalogEntry, ConjugatedShear, DensityChoice, FoldedDrift, HamiltonianTwist,
    Identity, MapSpec, Shear,
};
pub use hypotheses::{
    check_hypotheses, check_invariant_measure, check_invariant_measure_with_tol, check_twist,
    check_twist_with_tol, halton, HypothesisReport, MeasureCheck,
    TwistCheck,
};

use crate::error::{Error, Result};
use crate::geometry::{AnnulusPoint, Jacobian2, LiftPoint};

/// Central-difference step for maps without analytic Jacobians.
pub const FD_STEP: f64 = 1e-6;

/// Which tolerance tier a map's checks should default to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceTier {
    /// Closed-form maps.
    Analytic,
    /// Maps evaluated by integrating an ODE.
    Integrated,
    /// Maps conjugated through a numerically fitted chart.
    Chart,
}

impl ToleranceTier {
    pub fn boundary_tol(self) -> f64 {
        match self {
            ToleranceTier::Analytic => 1e-9,
            ToleranceTier::Integrated => 1e-6,
            ToleranceTier::Chart => 5e-3,
        }
    }

    pub fn measure_tol(self) -> f64 {
        match self {
            ToleranceTier::Analytic => 1e-6,
            ToleranceTier::Integrated => 1e-5,
            ToleranceTier::Chart => 5e-2,
        }
    }
}

/// A boundary-preserving diffeomorphism of `ℝ/ℤ × [0,1]`, evaluated through a fixed lift.
///
/// Implementations must be pure: every method may be called concurrently.
pub trait AnnulusMap: Send + Sync {
    fn name(&self) -> &str;

    /// The chosen lift `f̃` on the universal cover.
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint>;

    fn eval(&self, p: AnnulusPoint) -> Result<AnnulusPoint> {
        Ok(self.lift_eval(p.lift())?.project())
    }

    fn jacobian(&self, p: AnnulusPoint) -> Result<Jacobian2> {
        finite_difference_jacobian(self, p.lift(), FD_STEP)
    }

    /// Image and Jacobian together; integrated maps override this to share one solve.
    fn eval_with_jacobian(&self, p: LiftPoint) -> Result<(LiftPoint, Jacobian2)> {
        Ok((self.lift_eval(p)?, self.jacobian(p.project())?))
    }

    /// Density of the invariant measure (Lebesgue unless overridden).
    fn invariant_density(&self, _p: AnnulusPoint) -> f64 {
        1.0
    }

    fn tier(&self) -> ToleranceTier {
        ToleranceTier::Analytic
    }

    /// Lifted displacement `f̃(p) - p`.
    fn displacement(&self, p: LiftPoint) -> Result<[f64; 2]> {
        let q = self.lift_eval(p)?;
        Ok([q.x - p.x, q.y - p.y])
    }
}

pub type SharedMap = Arc<dyn AnnulusMap>;

pub fn finite_difference_jacobian<M: AnnulusMap + ?Sized>(map: &M, p: LiftPoint, h: f64) -> Result<Jacobian2> {
    let xp = map.lift_eval(LiftPoint::new(p.x + h, p.y))?;
    let xm = map.lift_eval(LiftPoint::new(p.x - h, p.y))?;
    let yp = map.lift_eval(LiftPoint::new(p.x, p.y + h))?;
    let ym = map.lift_eval(LiftPoint::new(p.x, p.y - h))?;
    let s = 0.5 / h;
    Ok(Jacobian2::new(
        (xp.x - xm.x) * s,
        (yp.x - ym.x) * s,
        (xp.y - xm.y) * s,
        (yp.y - ym.y) * s,
    ))
}

/// Integer translate `k` such that `f̃ - k` has the smallest mean |x-displacement| over both
/// boundary circles.
pub fn lift_shift<M: AnnulusMap + ?Sized>(map: &M, n_samples: usize) -> Result<i64> {
    let mut d = Vec::with_capacity(2 * n_samples);
    for y in [0.0, 1.0] {
        for i in 0..n_samples {
            let x = i as f64 / n_samples as f64;
            d.push(map.lift_eval(LiftPoint::new(x, y))?.x - x);
        }
    }
    Ok(best_shift(&d))
}

pub(crate) fn best_shift(d: &[f64]) -> i64 {
    let mean = d.iter().sum::<f64>() / d.len().max(1) as f64;
    let centre = mean.round() as i64;
    let cost = |k: i64| d.iter().map(|v| (v - k as f64).abs()).sum::<f64>();
    (centre - 1..=centre + 1)
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)).then(a.abs().cmp(&b.abs())))
        .unwrap_or(0)
}

/// A map whose lift is translated by an integer.
pub struct ShiftedLift {
    inner: SharedMap,
    shift: i64,
    name: String,
}

impl ShiftedLift {
    pub fn new(inner: SharedMap, shift: i64) -> Self {
        let name = inner.name().to_string();
        Self { inner, shift, name }
    }
}

impl AnnulusMap for ShiftedLift {
    fn name(&self) -> &str {
        &self.name
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        Ok(self.inner.lift_eval(p)?.shifted(-(self.shift as f64)))
    }
    fn eval(&self, p: AnnulusPoint) -> Result<AnnulusPoint> {
        self.inner.eval(p)
    }
    fn jacobian(&self, p: AnnulusPoint) -> Result<Jacobian2> {
        self.inner.jacobian(p)
    }
    fn eval_with_jacobian(&self, p: LiftPoint) -> Result<(LiftPoint, Jacobian2)> {
        let (q, j) = self.inner.eval_with_jacobian(p)?;
        Ok((q.shifted(-(self.shift as f64)), j))
    }
    fn invariant_density(&self, p: AnnulusPoint) -> f64 {
        self.inner.invariant_density(p)
    }
    fn tier(&self) -> ToleranceTier {
        self.inner.tier()
    }
}

/// Re-lifts `map` so its boundary displacements straddle zero as closely as possible.
pub fn normalized(map: SharedMap) -> Result<SharedMap> {
    let k = lift_shift(map.as_ref(), 64)?;
    if k == 0 {
        Ok(map)
    } else {
        Ok(Arc::new(ShiftedLift::new(map, k)))
    }
}

pub(crate) fn check_finite(p: LiftPoint) -> Result<LiftPoint> {
    if p.x.is_finite() && p.y.is_finite() {
        Ok(p)
    } else {
        Err(Error::InvalidArgument(format!("map produced a non-finite point {p:?}")))
    }
}
