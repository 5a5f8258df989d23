use std::f64::consts::PI;
use std::path::Path;

use anyhow::Result;
use annulus_twist::io::{csv_table, CsvCell, SvgScene};
use annulus_twist::ode::{energy, iterate_orbit, PendulumParams};
use annulus_twist::periodic::{band_seeds, build_annulus_chart, find_center, rotation_number, search_cycles, CycleClass};
use annulus_twist::PlanePoint;
use clap::Args;
use serde_json::json;

use crate::output::{self, parse_pair, positive, Outcome};
use crate::PendulumCmd;

const FIGURE_SEEDS: [&str; 10] = ["0.5,0", "1,0", "1.5,0", "2,0", "2.5,0", "3,0", "0,2.1", "0,-2.1", "0,2.6", "0,-2.6"];

#[derive(Args, Debug)]
pub struct OrbitsArgs {
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    /// Seed `x,y`; repeat for several orbits.
    #[arg(long = "seed", default_values = FIGURE_SEEDS, value_parser = parse_pair)]
    seeds: Vec<[f64; 2]>,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    tol: f64,
}

#[derive(Args, Debug)]
pub struct NewtonArgs {
    #[arg(long, default_value_t = 0.1)]
    a: f64,
    /// Period of the cycles.
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 40)]
    angles: usize,
    #[arg(long, default_value_t = 10)]
    radii: usize,
    /// The band spans the distances of these two points from the centre.
    #[arg(long, default_value = "0.9,0", value_parser = parse_pair)]
    band_inner: [f64; 2],
    #[arg(long, default_value = "1.4,0", value_parser = parse_pair)]
    band_outer: [f64; 2],
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    tol: f64,
}

#[derive(Args, Debug)]
pub struct RotationArgs {
    #[arg(long, default_value_t = 0.1)]
    a: f64,
    #[arg(long, default_value = "1,0", value_parser = parse_pair)]
    seed: [f64; 2],
    #[arg(long, default_value_t = 600)]
    iters: usize,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    tol: f64,
}

#[derive(Args, Debug)]
pub struct ChartArgs {
    #[arg(long, default_value_t = 0.1)]
    a: f64,
    #[arg(long, default_value = "1,0", value_parser = parse_pair)]
    inner: [f64; 2],
    #[arg(long, default_value = "1.35,0", value_parser = parse_pair)]
    outer: [f64; 2],
    #[arg(long, default_value_t = 512)]
    m: usize,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    tol: f64,
}

pub fn run(cmd: PendulumCmd, out: &Path) -> Result<Outcome> {
    match cmd {
        PendulumCmd::Orbits(a) => orbits(a, out),
        PendulumCmd::Newton(a) => newton(a, out),
        PendulumCmd::Rotation(a) => rotation(a, out),
        PendulumCmd::Chart(a) => chart(a, out),
    }
}

fn pt(p: [f64; 2]) -> PlanePoint {
    PlanePoint::new(p[0], p[1])
}

/// Angle into `[-π, π)` for plotting.
fn wrap_pi(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

fn orbits(args: OrbitsArgs, out: &Path) -> Result<Outcome> {
    let params = PendulumParams::new(args.a)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut scene = SvgScene::plane([-PI, PI, -3.0, 3.0]);
    for (i, s) in args.seeds.iter().enumerate() {
        let orbit = iterate_orbit(pt(*s), args.iters, params, args.tol)?;
        let e0 = energy(orbit.seed);
        let drift = orbit.iterates.iter().map(|p| (energy(*p) - e0).abs()).fold(0.0, f64::max);
        for (k, p) in std::iter::once(&orbit.seed).chain(&orbit.iterates).enumerate() {
            rows.push(vec![CsvCell::from(i), CsvCell::from(k), p.x.into(), p.y.into()]);
            scene.point("orbits", (wrap_pi(p.x), p.y), 1.2);
        }
        summaries.push(json!({"seed": s, "energy_drift": drift, "iterates": args.iters}));
    }
    output::text(out, "orbits.csv", &csv_table(&["orbit", "k", "x", "y"], rows))?;
    output::svg(out, "orbits.svg", &scene)?;
    output::report(out, "orbits", "pendulum-orbits", json!({"a": args.a, "orbits": summaries}))?;
    Ok(Outcome::Success)
}

fn newton(args: NewtonArgs, out: &Path) -> Result<Outcome> {
    let params = PendulumParams::new(args.a)?;
    let center = find_center(params, args.tol.min(1e-11))?;
    let c = center.points[0];
    let r0 = pt(args.band_inner).distance(&c);
    let r1 = pt(args.band_outer).distance(&c);
    let seeds = band_seeds(c, r0.min(r1), r0.max(r1), args.angles, args.radii);
    let cycles = search_cycles(&seeds, args.n, params, args.tol);
    let mut rows = Vec::new();
    let mut scene = SvgScene::plane([-PI, PI, -3.0, 3.0]);
    scene.point("points", (c.x, c.y), 3.0);
    for (i, cy) in cycles.iter().enumerate() {
        let class = match cy.class {
            CycleClass::Saddle => "saddle",
            CycleClass::Center => "center",
            CycleClass::Parabolic => "parabolic",
        };
        for (k, p) in cy.points.iter().enumerate() {
            rows.push(vec![CsvCell::from(i), CsvCell::from(k), p.x.into(), p.y.into(), class.into()]);
            scene.point(if cy.class == CycleClass::Saddle { "images" } else { "curves" }, (wrap_pi(p.x), p.y), 2.5);
        }
    }
    let count = |k: CycleClass| cycles.iter().filter(|c| c.class == k).count();
    output::text(out, "cycles.csv", &csv_table(&["cycle", "k", "x", "y", "class"], rows))?;
    output::svg(out, "cycles.svg", &scene)?;
    output::report(
        out,
        "cycles",
        "pendulum-cycles",
        json!({
            "a": args.a,
            "period": args.n,
            "center": [c.x, c.y],
            "seeds": seeds.len(),
            "n_saddle": count(CycleClass::Saddle),
            "n_center": count(CycleClass::Center),
            "cycles": cycles.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        }),
    )?;
    Ok(Outcome::Success)
}

fn rotation(args: RotationArgs, out: &Path) -> Result<Outcome> {
    let params = PendulumParams::new(args.a)?;
    let center = find_center(params, args.tol.min(1e-11))?.points[0];
    let r = rotation_number(pt(args.seed), center, args.iters, params, args.tol)?;
    output::report(
        out,
        "rotation",
        "pendulum-rotation",
        json!({
            "a": args.a,
            "seed": args.seed,
            "center": [center.x, center.y],
            "value": r.value,
            "uncertainty": r.uncertainty,
            "iterates": r.iterates_used,
        }),
    )?;
    Ok(Outcome::Success)
}

fn chart(args: ChartArgs, out: &Path) -> Result<Outcome> {
    let params = PendulumParams::new(args.a)?;
    let center = find_center(params, args.tol.min(1e-11))?.points[0];
    let chart = build_annulus_chart(pt(args.inner), pt(args.outer), center, params, args.m, args.iterations, args.tol)?;
    let mut scene = SvgScene::plane([-PI, PI, -3.0, 3.0]);
    let ring = |r: &dyn Fn(usize) -> f64| -> Vec<(f64, f64)> {
        (0..chart.m())
            .map(|j| {
                let th = 2.0 * PI * j as f64 / chart.m() as f64;
                (center.x + r(j) * th.cos(), center.y + r(j) * th.sin())
            })
            .collect()
    };
    scene.polyline("curves", ring(&|j| chart.r_inner[j]), true);
    scene.polyline("curves", ring(&|j| chart.r_outer[j]), true);
    scene.point("points", (center.x, center.y), 3.0);
    output::text(out, "chart.csv", &chart.csv())?;
    output::svg(out, "chart.svg", &scene)?;
    let range = |v: &[f64]| [v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(0.0, f64::max)];
    output::report(
        out,
        "chart",
        "pendulum-chart",
        json!({
            "a": args.a,
            "center": [center.x, center.y],
            "m": chart.m(),
            "min_gap": chart.min_gap(),
            "r_inner_range": range(&chart.r_inner),
            "r_outer_range": range(&chart.r_outer),
        }),
    )?;
    Ok(Outcome::Success)
}
