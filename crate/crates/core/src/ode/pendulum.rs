//! The forced pendulum `x'' + sin x = a cos t` and its 2π-period map.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::dopri::Dopri5;
use crate::io::fmt6;
use crate::error::{Error, Result};
use crate::geometry::{Jacobian2, PlanePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    /// Forcing amplitude.
    pub a: f64,
}

impl PendulumParams {
    pub fn new(a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("forcing amplitude must be >= 0, got {a}")));
        }
        Ok(Self { a })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowResult {
    pub endpoint: PlanePoint,
    /// Solution of the variational equation over the interval.
    pub monodromy: Jacobian2,
    pub steps_taken: usize,
    pub est_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Orbit {
    pub seed: PlanePoint,
    /// Successive period-map images of `seed` (the seed itself is not repeated here).
    pub iterates: Vec<PlanePoint>,
    pub params: PendulumParams,
}

/// Velocity `(y, -sin x + a cos t)`.
pub fn pendulum_field(t: f64, p: PlanePoint, params: PendulumParams) -> (f64, f64) {
    (p.y, -p.x.sin() + params.a * t.cos())
}

/// Conserved energy of the unforced pendulum.
pub fn energy(p: PlanePoint) -> f64 {
    0.5 * p.y * p.y - p.x.cos()
}

fn extended_field(t: f64, s: &[f64; 6], a: f64) -> [f64; 6] {
    let (sin_x, cos_x) = s[0].sin_cos();
    // J' = [[0, 1], [-cos x, 0]] J, J stored row-major in s[2..6]
    [
        s[1],
        -sin_x + a * t.cos(),
        s[4],
        s[5],
        -cos_x * s[2],
        -cos_x * s[3],
    ]
}

fn run(
    p: PlanePoint,
    t0: f64,
    t1: f64,
    params: PendulumParams,
    tol: f64,
    observe: Option<&mut dyn FnMut(f64, &[f64; 6])>,
) -> Result<FlowResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let a = params.a;
    let sol = Dopri5::with_tol(tol).integrate(
        |t, s: &[f64; 6]| extended_field(t, s, a),
        t0,
        t1,
        [p.x, p.y, 1.0, 0.0, 0.0, 1.0],
        observe,
    )?;
    let s = sol.y;
    Ok(FlowResult {
        endpoint: PlanePoint::new(s[0], s[1]),
        monodromy: Jacobian2::new(s[2], s[3], s[4], s[5]),
        steps_taken: sol.steps,
        est_error: sol.est_error,
    })
}

/// Time-`t1` image of `p` started at time `t0`, with the variational solution alongside.
pub fn flow(p: PlanePoint, t0: f64, t1: f64, params: PendulumParams, tol: f64) -> Result<FlowResult> {
    run(p, t0, t1, params, tol, None)
}

/// Like [`flow`] but also returns every accepted step as `(t, x, y)`.
pub fn flow_trace(
    p: PlanePoint,
    t0: f64,
    t1: f64,
    params: PendulumParams,
    tol: f64,
) -> Result<(FlowResult, Vec<(f64, f64, f64)>)> {
    let mut trace = Vec::new();
    let mut obs = |t: f64, s: &[f64; 6]| trace.push((t, s[0], s[1]));
    let r = run(p, t0, t1, params, tol, Some(&mut obs))?;
    Ok((r, trace))
}

/// The period map `P = φ_{2π}`.
pub fn period_map(p: PlanePoint, params: PendulumParams, tol: f64) -> Result<FlowResult> {
    flow(p, 0.0, TAU, params, tol)
}

/// `n`-fold period map with the chained monodromy `D(Pⁿ)`.
pub fn period_map_n(p: PlanePoint, n: usize, params: PendulumParams, tol: f64) -> Result<FlowResult> {
    let mut cur = p;
    let mut m = Jacobian2::IDENTITY;
    let mut steps = 0;
    let mut err = 0.0;
    for _ in 0..n {
        let r = period_map(cur, params, tol)?;
        m = r.monodromy.mul(&m);
        cur = r.endpoint;
        steps += r.steps_taken;
        err += r.est_error;
    }
    Ok(FlowResult { endpoint: cur, monodromy: m, steps_taken: steps, est_error: err })
}

pub fn iterate_orbit(seed: PlanePoint, n: usize, params: PendulumParams, tol: f64) -> Result<Orbit> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one iterate".into()));
    }
    let mut iterates = Vec::with_capacity(n);
    let mut cur = seed;
    for _ in 0..n {
        cur = period_map(cur, params, tol)?.endpoint;
        iterates.push(cur);
    }
    Ok(Orbit { seed, iterates, params })
}

/// Orbit CSV with header `k,x,y`; row 0 is the seed.
pub fn orbit_csv(orbit: &Orbit) -> String {
    let mut out = String::from("k,x,y\n");
    out.push_str(&format!("0,{},{}\n", fmt6(orbit.seed.x), fmt6(orbit.seed.y)));
    for (k, p) in orbit.iterates.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", k + 1, fmt6(p.x), fmt6(p.y)));
    }
    out
}

pub fn trace_csv(trace: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("t,x,y\n");
    for (t, x, y) in trace {
        out.push_str(&format!("{},{},{}\n", fmt6(*t), fmt6(*x), fmt6(*y)));
    }
    out
}
