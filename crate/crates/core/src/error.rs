use thiserror::Error;

use crate::path::MeasureVerdict;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong between sampling a map and certifying its fixed points.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown map `{0}`")]
    UnknownMap(String),

    #[error("map is not boundary preserving: |Δy| = {deviation:e} at x = {x} on the {side} boundary")]
    NotBoundaryPreserving {
        x: f64,
        side: &'static str,
        deviation: f64,
    },

    #[error("singular Jacobian (|det| = {det:e}) at ({x}, {y})")]
    SingularJacobian { x: f64, y: f64, det: f64 },

    #[error("adaptive step underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("Newton iteration failed: {0}")]
    NewtonDiverged(String),

    #[error("orbit came within {distance:e} of the rotation center")]
    CenterCollision { distance: f64 },

    #[error("orbit closure is not a graph over the angle about the center")]
    NotStarShaped,

    #[error("inner and outer curves are not separated (minimum gap {gap:e})")]
    ChartGap { gap: f64 },

    #[error("displacement field is degenerate: {fraction:.3} of samples vanish")]
    DegenerateField { fraction: f64 },

    #[error("point lies on the curve")]
    OnCurve,

    #[error("component {0} has no non-degenerate critical points")]
    NoCriticalPoints(usize),

    #[error("vertical from ({x}, {y}) reached the boundary of the annulus")]
    HitBoundary { x: f64, y: f64 },

    #[error("vertical from ({x}, {y}) met no component")]
    NoIntersection { x: f64, y: f64 },

    #[error("path generation requires monotone components; component {0} changes sign")]
    MixedComponent(usize),

    #[error("crossover at junction {0}")]
    CrossoverDetected(String),

    #[error("closed loop has zero winding")]
    ZeroWindingLoop,

    #[error("component {0} is fixed pointwise")]
    WholeComponentFixed(usize),

    #[error("found {found} fixed point(s); at least two expected")]
    TooFewFixedPoints { found: usize },

    #[error("all components are monotone; witness loop changes measure by {:e}", .0.difference)]
    TheoremViolationWitness(Box<MeasureVerdict>),

    #[error("component meets the excision circle {0} time(s)")]
    OddIntersection(usize),

    #[error("no critical-point-free vertical strip")]
    NoCriticalFreeStrip,

    #[error("zero set is not regular (min |∇F| = {min_grad:e}) after {retries} retries")]
    NotRegular { min_grad: f64, retries: usize },
}
