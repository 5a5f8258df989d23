//! Numerical integration: an adaptive Runge–Kutta core plus the forced pendulum.

pub mod dopri;
pub mod pendulum;

pub use dopri::{Dopri5, Integration};
pub use pendulum::{
    energy, flow, flow_trace, iterate_orbit, orbit_csv, pendulum_field, period_map, period_map_n,
    trace_csv, FlowResult, Orbit, PendulumParams,
};

use crate::error::Result;
use crate::geometry::Jacobian2;

/// Integrates an autonomous planar field together with its variational equation
/// over `[0, t1]`. `field` returns the velocity and its Jacobian at a point.
pub fn autonomous_flow_with_jacobian<F>(field: F, p: [f64; 2], t1: f64, tol: f64) -> Result<([f64; 2], Jacobian2)>
where
    F: Fn(f64, f64) -> ([f64; 2], Jacobian2),
{
    let sol = Dopri5::with_tol(tol).integrate(
        |_, s: &[f64; 6]| {
            let (v, a) = field(s[0], s[1]);
            [
                v[0],
                v[1],
                a.a * s[2] + a.b * s[4],
                a.a * s[3] + a.b * s[5],
                a.c * s[2] + a.d * s[4],
                a.c * s[3] + a.d * s[5],
            ]
        },
        0.0,
        t1,
        [p[0], p[1], 1.0, 0.0, 0.0, 1.0],
        None,
    )?;
    let s = sol.y;
    Ok(([s[0], s[1]], Jacobian2::new(s[2], s[3], s[4], s[5])))
}

/// Integrates an autonomous planar field over `[0, t1]` without the variational part.
pub fn autonomous_flow<F>(field: F, p: [f64; 2], t1: f64, tol: f64) -> Result<[f64; 2]>
where
    F: Fn(f64, f64) -> [f64; 2],
{
    let sol = Dopri5::with_tol(tol).integrate(|_, s: &[f64; 2]| field(s[0], s[1]), 0.0, t1, p, None)?;
    Ok(sol.y)
}
