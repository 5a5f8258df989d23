//! Periodic cycles of the pendulum period map, rotation numbers about a centre, and the
//! annulus chart between two invariant curves.

use std::f64::consts::TAU;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::io::fmt6;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, AnnulusPoint, LiftPoint, PlanePoint};
use crate::map::{normalized, AnnulusMap, MapSpec, SharedMap, ToleranceTier};
use crate::ode::{period_map, period_map_n, PendulumParams};

/// Half-width of the parabolic band in trace classification.
pub const CLASS_TOL: f64 = 1e-6;
/// Newton stops once `|Pⁿ(z) - z|` drops below this.
pub const NEWTON_TOL: f64 = 1e-10;
/// Accepted residual when integration noise stalls Newton before [`NEWTON_TOL`].
pub const STALL_TOL: f64 = 1e-8;
pub const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleClass {
    Saddle,
    Center,
    Parabolic,
}

pub fn classify(trace: f64) -> CycleClass {
    if trace.abs() > 2.0 + CLASS_TOL {
        CycleClass::Saddle
    } else if trace.abs() < 2.0 - CLASS_TOL {
        CycleClass::Center
    } else {
        CycleClass::Parabolic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicCycle {
    pub period: usize,
    pub points: Vec<PlanePoint>,
    pub residual: f64,
    pub trace: f64,
    pub class: CycleClass,
}

impl PeriodicCycle {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "period": self.period,
            "points": self.points.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
            "trace": self.trace,
            "class": self.class,
            "residual": self.residual,
        })
    }

    /// Smallest distance between two distinct points of the cycle.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                best = best.min(self.points[i].distance(&self.points[j]));
            }
        }
        best
    }

    /// Same period and same points up to a cyclic relabelling, within `tol`. Angles are compared
    /// modulo 2π, since translates by a full turn describe the same motion.
    pub fn same_as(&self, other: &PeriodicCycle, tol: f64) -> bool {
        let n = self.points.len();
        if n != other.points.len() {
            return false;
        }
        let close = |p: &PlanePoint, q: &PlanePoint| wrap_angle(p.x - q.x).hypot(p.y - q.y) < tol;
        (0..n).any(|r| (0..n).all(|k| close(&self.points[k], &other.points[(k + r) % n])))
    }
}

/// Damped Newton on `G(z) = Pⁿ(z) - z` with `DG = D(Pⁿ) - I` from the variational equations.
pub fn newton_cycle(seed: PlanePoint, n: usize, params: PendulumParams, tol: f64) -> Result<PeriodicCycle> {
    if n == 0 {
        return Err(Error::InvalidArgument("period must be at least 1".into()));
    }
    // cheap integration until the iterate is close, then the requested tolerance
    let coarse = tol.max(1e-8);
    let z = if coarse > tol {
        match newton_loop(seed, n, params, coarse, 1e-5) {
            Ok(z) => z,
            Err(Error::StepFailure { .. }) => seed,
            Err(e) => return Err(e),
        }
    } else {
        seed
    };
    let z = newton_loop(z, n, params, tol, NEWTON_TOL)?;
    let r = period_map_n(z, n, params, tol)?;
    finish_cycle(z, n, params, tol, r.monodromy.trace())
}

fn newton_loop(seed: PlanePoint, n: usize, params: PendulumParams, tol: f64, target: f64) -> Result<PlanePoint> {
    let mut z = seed;
    let mut r = period_map_n(z, n, params, tol)?;
    let mut g = [r.endpoint.x - z.x, r.endpoint.y - z.y];
    let mut gnorm = g[0].hypot(g[1]);
    let mut iter = 0;
    while gnorm >= target {
        if iter == NEWTON_MAX_ITER {
            return Err(Error::NewtonDiverged(format!("no convergence in {NEWTON_MAX_ITER} iterations (|G| = {gnorm:e})")));
        }
        iter += 1;
        let dg = r.monodromy.minus_identity();
        let step = dg
            .solve([-g[0], -g[1]], 1e-12)
            .ok_or_else(|| Error::NewtonDiverged(format!("singular D(P^{n}) - I (det = {:e})", dg.det())))?;
        // cap wild steps, then backtrack until the residual drops
        let len = step[0].hypot(step[1]);
        let mut lambda = if len > 0.5 { 0.5 / len } else { 1.0 };
        let mut accepted = None;
        for _ in 0..12 {
            let trial = PlanePoint::new(z.x + lambda * step[0], z.y + lambda * step[1]);
            if let Ok(rt) = period_map_n(trial, n, params, tol) {
                let gt = [rt.endpoint.x - trial.x, rt.endpoint.y - trial.y];
                let nt = gt[0].hypot(gt[1]);
                if nt < gnorm {
                    accepted = Some((trial, rt, gt, nt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((zt, rt, gt, nt)) => {
                z = zt;
                r = rt;
                g = gt;
                gnorm = nt;
            }
            None if gnorm < STALL_TOL => break,
            None => {
                return Err(Error::NewtonDiverged(format!("line search failed at |G| = {gnorm:e}")));
            }
        }
    }
    Ok(z)
}

fn finish_cycle(z: PlanePoint, n: usize, params: PendulumParams, tol: f64, trace: f64) -> Result<PeriodicCycle> {
    let mut points = Vec::with_capacity(n);
    points.push(z);
    let mut images = Vec::with_capacity(n);
    for k in 0..n {
        let img = period_map(points[k], params, tol)?.endpoint;
        images.push(img);
        if k + 1 < n {
            points.push(img);
        }
    }
    let residual = (0..n)
        .map(|k| images[k].distance(&points[(k + 1) % n]))
        .fold(0.0, f64::max);
    Ok(PeriodicCycle { period: n, points, residual, trace, class: classify(trace) })
}

/// Harmonic-balance guess `x ≈ -(8a)^{1/3}` for the resonant 2π-periodic response near the
/// lower equilibrium, polished by Newton on `P`.
pub fn find_center(params: PendulumParams, tol: f64) -> Result<PeriodicCycle> {
    let guess = PlanePoint::new(-(8.0 * params.a).cbrt(), 0.0);
    newton_cycle(guess, 1, params, tol)
}

/// Seeds on `n_angles × n_radii` polar grid about `center`, radii in `[r0, r1]`.
pub fn band_seeds(center: PlanePoint, r0: f64, r1: f64, n_angles: usize, n_radii: usize) -> Vec<PlanePoint> {
    let mut seeds = Vec::with_capacity(n_angles * n_radii);
    for i in 0..n_radii {
        let r = if n_radii == 1 { r0 } else { r0 + (r1 - r0) * i as f64 / (n_radii - 1) as f64 };
        for j in 0..n_angles {
            let th = TAU * j as f64 / n_angles as f64;
            seeds.push(PlanePoint::new(center.x + r * th.cos(), center.y + r * th.sin()));
        }
    }
    seeds
}

/// Runs Newton from every seed and keeps distinct cycles of minimal period `n`
/// (first-found order, so the result does not depend on thread scheduling).
pub fn search_cycles(seeds: &[PlanePoint], n: usize, params: PendulumParams, tol: f64) -> Vec<PeriodicCycle> {
    let found: Vec<Option<PeriodicCycle>> = seeds
        .par_iter()
        .map(|&s| newton_cycle(s, n, params, tol).ok())
        .collect();
    dedup_cycles(found.into_iter().flatten().filter(|c| c.min_separation() > 1e-6))
}

pub fn dedup_cycles(cycles: impl IntoIterator<Item = PeriodicCycle>) -> Vec<PeriodicCycle> {
    let mut out: Vec<PeriodicCycle> = Vec::new();
    for c in cycles {
        if !out.iter().any(|o| o.same_as(&c, 1e-6)) {
            out.push(c);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationEstimate {
    /// Counter-clockwise revolutions per iterate, reduced into `[0, 1)`.
    pub value: f64,
    pub iterates_used: usize,
    pub center: PlanePoint,
    pub uncertainty: f64,
}

/// Mean counter-clockwise angular advance about `center`, each step taken as the nearest
/// representative in `(-π, π]`.
pub fn rotation_number(
    seed: PlanePoint,
    center: PlanePoint,
    n_iter: usize,
    params: PendulumParams,
    tol: f64,
) -> Result<RotationEstimate> {
    if n_iter < 60 {
        return Err(Error::InvalidArgument(format!("need at least 60 iterates, got {n_iter}")));
    }
    let d0 = seed.distance(&center);
    if d0 < 1e-9 {
        return Err(Error::CenterCollision { distance: d0 });
    }
    let angle = |p: PlanePoint| (p.y - center.y).atan2(p.x - center.x);
    let mut cur = seed;
    let mut prev = angle(seed);
    let mut total = 0.0;
    for _ in 0..n_iter {
        cur = period_map(cur, params, tol)?.endpoint;
        let d = cur.distance(&center);
        if d < 1e-9 {
            return Err(Error::CenterCollision { distance: d });
        }
        let a = angle(cur);
        total += wrap_angle(a - prev);
        prev = a;
    }
    let mut value = (total / (TAU * n_iter as f64)).rem_euclid(1.0);
    if value >= 1.0 {
        value = 0.0;
    }
    Ok(RotationEstimate { value, iterates_used: n_iter, center, uncertainty: 1.0 / n_iter as f64 })
}

/// Radius profiles of two invariant curves about a centre, sampled on `m` equispaced
/// counter-clockwise angles `θ_j = 2πj/m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnulusChart {
    pub center: PlanePoint,
    pub r_inner: Vec<f64>,
    pub r_outer: Vec<f64>,
}

fn interp_periodic(v: &[f64], theta: f64) -> f64 {
    let m = v.len();
    let s = theta.rem_euclid(TAU) / TAU * m as f64;
    let i = (s.floor() as usize).min(m - 1);
    let f = s - i as f64;
    v[i] * (1.0 - f) + v[(i + 1) % m] * f
}

impl AnnulusChart {
    pub fn m(&self) -> usize {
        self.r_inner.len()
    }

    pub fn r_inner_at(&self, theta: f64) -> f64 {
        interp_periodic(&self.r_inner, theta)
    }

    pub fn r_outer_at(&self, theta: f64) -> f64 {
        interp_periodic(&self.r_outer, theta)
    }

    /// Chart map: `θ = 2πx`, `r = (1-y)·r_inner(θ) + y·r_outer(θ)`.
    pub fn to_plane(&self, x: f64, y: f64) -> PlanePoint {
        let th = TAU * x;
        let r = (1.0 - y) * self.r_inner_at(th) + y * self.r_outer_at(th);
        PlanePoint::new(self.center.x + r * th.cos(), self.center.y + r * th.sin())
    }

    /// Inverse chart; `y` may fall slightly outside `[0, 1]` for points off the annulus.
    pub fn from_plane(&self, q: PlanePoint) -> AnnulusPoint {
        let dx = q.x - self.center.x;
        let dy = q.y - self.center.y;
        let th = dy.atan2(dx);
        let (ri, ro) = (self.r_inner_at(th), self.r_outer_at(th));
        AnnulusPoint::new(th / TAU, (dx.hypot(dy) - ri) / (ro - ri))
    }

    pub fn min_gap(&self) -> f64 {
        self.r_inner
            .iter()
            .zip(&self.r_outer)
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("theta,r_inner,r_outer\n");
        for j in 0..self.m() {
            let th = TAU * j as f64 / self.m() as f64;
            out.push_str(&format!("{},{},{}\n", fmt6(th), fmt6(self.r_inner[j]), fmt6(self.r_outer[j])));
        }
        out
    }
}

/// Samples `r(θ)` from an orbit closure: iterates `seed`, checks that the period map preserves
/// the angular order of the samples (the closure is a graph over the angle), and interpolates
/// linearly in angle.
pub fn radius_profile(
    seed: PlanePoint,
    center: PlanePoint,
    params: PendulumParams,
    iterations: usize,
    m: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let mut pts = Vec::with_capacity(iterations + 1);
    pts.push(seed);
    for k in 0..iterations {
        pts.push(period_map(pts[k], params, tol)?.endpoint);
    }
    let polar: Vec<(f64, f64)> = pts
        .iter()
        .map(|p| {
            let (dx, dy) = (p.x - center.x, p.y - center.y);
            (dy.atan2(dx).rem_euclid(TAU), dx.hypot(dy))
        })
        .collect();
    if polar.iter().any(|&(_, r)| r < 1e-9) {
        return Err(Error::CenterCollision { distance: polar.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) });
    }

    let n = iterations;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| polar[a].0.total_cmp(&polar[b].0));
    let mut rank = vec![0usize; n + 1];
    for (pos, &k) in order.iter().enumerate() {
        rank[k] = pos;
    }
    // angular order must be carried to angular order (a cyclic shift); images of 0..n-2 skip
    // only the seed's slot, so consecutive image ranks differ by 1, or by 2 exactly once
    let mut skips = 0;
    for w in order.windows(2).chain(std::iter::once(&[order[n - 1], order[0]][..])) {
        let (k1, k2) = (w[0], w[1]);
        if k1 + 1 >= n || k2 + 1 >= n {
            continue;
        }
        let d = (rank[k2 + 1] + n - rank[k1 + 1]) % n;
        match d {
            1 => {}
            2 if skips == 0 => skips += 1,
            _ => return Err(Error::NotStarShaped),
        }
    }

    let sorted: Vec<(f64, f64)> = order.iter().map(|&k| polar[k]).collect();
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let th = TAU * j as f64 / m as f64;
        let idx = sorted.partition_point(|&(a, _)| a <= th);
        let (lo, hi) = if idx == 0 {
            let (a, r) = sorted[n - 1];
            ((a - TAU, r), sorted[0])
        } else if idx == n {
            let (a, r) = sorted[0];
            (sorted[n - 1], (a + TAU, r))
        } else {
            (sorted[idx - 1], sorted[idx])
        };
        let span = hi.0 - lo.0;
        let f = if span > 0.0 { (th - lo.0) / span } else { 0.0 };
        out.push(lo.1 + f * (hi.1 - lo.1));
    }
    Ok(out)
}

/// Chart between the orbit closures of `inner_seed` and `outer_seed` about `center`.
pub fn build_annulus_chart(
    inner_seed: PlanePoint,
    outer_seed: PlanePoint,
    center: PlanePoint,
    params: PendulumParams,
    m: usize,
    iterations: usize,
    tol: f64,
) -> Result<AnnulusChart> {
    if m < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 chart angles, got {m}")));
    }
    if iterations < 600 {
        return Err(Error::InvalidArgument(format!("need at least 600 iterates, got {iterations}")));
    }
    let (ri, ro) = rayon::join(
        || radius_profile(inner_seed, center, params, iterations, m, tol),
        || radius_profile(outer_seed, center, params, iterations, m, tol),
    );
    let chart = AnnulusChart { center, r_inner: ri?, r_outer: ro? };
    let gap = chart.min_gap();
    if !(gap > 1e-3) {
        return Err(Error::ChartGap { gap });
    }
    Ok(chart)
}

/// `Pⁿ` read through an annulus chart. The lift follows the angle through each of the `n`
/// period maps, so `x` advances by the unwrapped revolutions.
pub struct ChartMap {
    pub chart: Arc<AnnulusChart>,
    pub n: usize,
    pub params: PendulumParams,
    pub tol: f64,
    name: String,
}

impl ChartMap {
    pub fn new(chart: AnnulusChart, n: usize, params: PendulumParams, tol: f64) -> Self {
        Self { chart: Arc::new(chart), n, params, tol, name: "pendulum_annulus".into() }
    }

    /// Plane point for an annulus point.
    pub fn to_plane(&self, p: AnnulusPoint) -> PlanePoint {
        self.chart.to_plane(p.x, p.y)
    }
}

impl AnnulusMap for ChartMap {
    fn name(&self) -> &str {
        &self.name
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        let c = self.chart.center;
        let mut q = self.chart.to_plane(p.x, p.y);
        let mut prev = (q.y - c.y).atan2(q.x - c.x);
        let mut turned = 0.0;
        for _ in 0..self.n {
            q = period_map(q, self.params, self.tol)?.endpoint;
            let a = (q.y - c.y).atan2(q.x - c.x);
            turned += wrap_angle(a - prev);
            prev = a;
        }
        let back = self.chart.from_plane(q);
        Ok(LiftPoint::new(p.x + turned / TAU, back.y))
    }
    /// Plane area pulled back through the chart: `dA = r dr dθ = 2π r (r_outer - r_inner) dx dy`.
    fn invariant_density(&self, p: AnnulusPoint) -> f64 {
        let th = TAU * p.x;
        let (ri, ro) = (self.chart.r_inner_at(th), self.chart.r_outer_at(th));
        TAU * ((1.0 - p.y) * ri + p.y * ro) * (ro - ri)
    }
    fn tier(&self) -> ToleranceTier {
        ToleranceTier::Chart
    }
}

pub fn annulus_map_from_chart(chart: AnnulusChart, n: usize, params: PendulumParams, tol: f64) -> Result<SharedMap> {
    if n == 0 {
        return Err(Error::InvalidArgument("period must be at least 1".into()));
    }
    normalized(Arc::new(ChartMap::new(chart, n, params, tol)))
}

/// Default setup: a = 0.1, curves through (1,0) and (1.35,0), sixth iterate.
pub(crate) fn pendulum_annulus_from_spec(spec: &MapSpec) -> Result<SharedMap> {
    normalized(Arc::new(pendulum_chart_map(spec)?))
}

/// The chart map behind a `pendulum_annulus` spec, before lift normalization. Keeps access to
/// the chart for pulling annulus points back to the plane.
pub fn pendulum_chart_map(spec: &MapSpec) -> Result<ChartMap> {
    if spec.name != "pendulum_annulus" {
        return Err(Error::InvalidArgument(format!("expected a pendulum_annulus spec, got `{}`", spec.name)));
    }
    spec.allow(&["a", "n", "inner", "outer", "m", "iterations", "tol"])?;
    let params = PendulumParams::new(spec.num("a", 0.1)?)?;
    let n = spec.num("n", 6.0)?;
    let m = spec.num("m", 512.0)?;
    let iterations = spec.num("iterations", 2000.0)?;
    for (k, v) in [("n", n), ("m", m), ("iterations", iterations)] {
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::InvalidArgument(format!("`{k}` must be a positive integer")));
        }
    }
    let tol = spec.num("tol", 1e-10)?;
    let inner = spec.pair("inner", [1.0, 0.0])?;
    let outer = spec.pair("outer", [1.35, 0.0])?;
    let center = find_center(params, tol.min(1e-11))?.points[0];
    let chart = build_annulus_chart(
        PlanePoint::new(inner[0], inner[1]),
        PlanePoint::new(outer[0], outer[1]),
        center,
        params,
        m as usize,
        iterations as usize,
        tol,
    )?;
    Ok(ChartMap::new(chart, n as usize, params, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    const A0: PendulumParams = PendulumParams { a: 0.0 };

    #[test]
    fn classification_bands() {
        assert_eq!(classify(2.5), CycleClass::Saddle);
        assert_eq!(classify(-2.5), CycleClass::Saddle);
        assert_eq!(classify(0.3), CycleClass::Center);
        assert_eq!(classify(2.0 + 1e-8), CycleClass::Parabolic);
    }

    #[test]
    fn inverted_pendulum_is_saddle() {
        let c = newton_cycle(PlanePoint::new(3.0, 0.1), 1, A0, 1e-12).unwrap();
        assert!((c.points[0].x - std::f64::consts::PI).abs() < 1e-8 && c.points[0].y.abs() < 1e-8);
        assert_eq!(c.class, CycleClass::Saddle);
        assert!(c.residual < 1e-8);
    }

    #[test]
    fn same_as_ignores_rotation() {
        let p = |x| PlanePoint::new(x, 0.0);
        let a = PeriodicCycle { period: 3, points: vec![p(0.0), p(1.0), p(2.0)], residual: 0.0, trace: 0.0, class: CycleClass::Center };
        let mut b = a.clone();
        b.points.rotate_left(1);
        assert!(a.same_as(&b, 1e-9));
        b.points.swap(0, 1);
        assert!(!a.same_as(&b, 1e-9));
    }

    #[test]
    fn chart_round_trip() {
        let chart = AnnulusChart {
            center: PlanePoint::new(0.2, -0.1),
            r_inner: (0..16).map(|j| 1.0 + 0.1 * (j as f64).sin()).collect(),
            r_outer: (0..16).map(|j| 2.0 + 0.1 * (j as f64).cos()).collect(),
        };
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.7), (0.999, 1.0), (0.51, 0.25)] {
            let q = chart.from_plane(chart.to_plane(x, y));
            assert!(AnnulusPoint::new(x, y).distance(&q) < 1e-12);
        }
    }

    #[test]
    fn rotation_rejects_bad_input() {
        let c = PlanePoint::new(0.0, 0.0);
        assert!(rotation_number(c, c, 60, A0, 1e-10).is_err());
        assert!(rotation_number(PlanePoint::new(0.5, 0.0), c, 10, A0, 1e-10).is_err());
    }
}
