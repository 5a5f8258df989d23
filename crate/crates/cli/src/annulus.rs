use std::path::Path;

use anyhow::{Context, Result};
use annulus_twist::fixed::{find_all_fixed_points, AuditContext, FixedPointRecord, FixedPointScan};
use annulus_twist::io::{csv_table, CsvCell, SvgScene};
use annulus_twist::map::{check_hypotheses, AnnulusMap, HypothesisReport, MapSpec, SharedMap};
use annulus_twist::path::{all_critical_points, default_eps_window, find_closed_loop, measure_verdict};
use annulus_twist::zero_set::{extract_conjugated, extract_regular, t_invert, InvariantSet};
use annulus_twist::{Error, LiftPoint};
use clap::Args;
use serde_json::{json, Value};

use crate::output::{self, grid_size, parse_pair, positive, Outcome};
use crate::{AnnulusCmd, MapArgs};

const RETRIES: usize = 4;
/// `|f₂ - y|` below which a vertex counts as fixed.
const FIXED_DISP: f64 = 1e-9;

fn pointwise_fixed(c: &annulus_twist::zero_set::Component) -> bool {
    c.vertical_disp.iter().all(|d| d.abs() < FIXED_DISP)
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, default_value_t = 256)]
    twist_samples: usize,
    #[arg(long, default_value_t = 1024)]
    measure_samples: usize,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1.3, value_parser = positive)]
    phi: f64,
    #[arg(long, default_value_t = 256, value_parser = grid_size)]
    nx: usize,
    #[arg(long, default_value_t = 128, value_parser = grid_size)]
    ny: usize,
}

#[derive(Args, Debug)]
pub struct CurvesArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct FixedArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Skip the twist and measure checks.
    #[arg(long)]
    skip_check: bool,
    #[arg(long, default_value_t = 64)]
    twist_samples: usize,
    #[arg(long, default_value_t = 256)]
    measure_samples: usize,
}

#[derive(Args, Debug)]
pub struct PathArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Initial excision radius.
    #[arg(long, default_value_t = 0.05, value_parser = positive)]
    epsilon: f64,
    #[arg(long, default_value_t = 6)]
    halvings: usize,
    /// Audit the fixed point nearest to `x,y` (default: first saddle, else first record).
    #[arg(long, value_parser = parse_pair)]
    center: Option<[f64; 2]>,
    /// Grid size for sup |det Df|.
    #[arg(long, default_value_t = 256)]
    det_grid: usize,
}

pub fn run(cmd: AnnulusCmd, out: &Path) -> Result<Outcome> {
    match cmd {
        AnnulusCmd::Check(a) => check(a, out),
        AnnulusCmd::InvariantCurves(a) => curves(a, out),
        AnnulusCmd::FixedPoints(a) => fixed_points(a, out),
        AnnulusCmd::Path(a) => path(a, out),
        AnnulusCmd::Audit(a) => audit(a, out),
    }
}

fn build(args: &MapArgs) -> Result<(Value, SharedMap)> {
    let spec = MapSpec::from_json(&args.map)?;
    let value = serde_json::to_value(&spec).context("map spec")?;
    let map = spec.build()?;
    Ok((value, map))
}

/// Runs the hypothesis checks; a boundary violation is reported instead of raised.
fn hypotheses(map: &dyn AnnulusMap, twist: usize, measure: usize) -> Result<Result<HypothesisReport, Value>> {
    match check_hypotheses(map, twist, measure) {
        Ok(r) => Ok(Ok(r)),
        Err(e @ Error::NotBoundaryPreserving { .. }) => {
            Ok(Err(json!({"status": "not_boundary_preserving", "message": e.to_string()})))
        }
        Err(e) => Err(e.into()),
    }
}

fn check(args: CheckArgs, out: &Path) -> Result<Outcome> {
    let (spec, map) = build(&args.map)?;
    match hypotheses(map.as_ref(), args.twist_samples, args.measure_samples)? {
        Ok(r) => {
            let ok = r.ok();
            let mut body = serde_json::to_value(&r)?;
            body["spec"] = spec;
            body["status"] = json!(if ok { "ok" } else { "hypothesis_failure" });
            output::report(out, "check", "check", body)?;
            Ok(Outcome::from_ok(ok))
        }
        Err(mut body) => {
            body["spec"] = spec;
            output::report(out, "check", "check", body)?;
            Ok(Outcome::HypothesisFailure)
        }
    }
}

fn components_json(set: &InvariantSet) -> Value {
    set.components
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "closed": c.closed,
                "winding": c.winding,
                "u": c.u.label(),
                "n_vertices": c.len(),
                "pointwise_fixed": pointwise_fixed(c),
            })
        })
        .collect()
}

/// Sign changes of `f₂ - y` along each component, linearly interpolated.
fn fixed_candidates(set: &InvariantSet) -> Vec<LiftPoint> {
    let mut pts = Vec::new();
    for c in set.components.iter().filter(|c| !pointwise_fixed(c)) {
        let n = c.len();
        let m = if c.closed { n } else { n.saturating_sub(1) };
        for k in 0..m {
            let (a, b) = (c.vertical_disp[k], c.vertical_disp[(k + 1) % n]);
            if a == 0.0 || (a < 0.0) != (b < 0.0) {
                let s = if a == b { 0.0 } else { a / (a - b) };
                let (p, q) = (c.vertices[k], c.vertices[(k + 1) % n]);
                let qx = p.x + annulus_twist::geometry::wrap_signed(q.x - p.x);
                pts.push(LiftPoint::new(p.x + s * (qx - p.x), p.y + s * (q.y - p.y)));
            }
        }
    }
    pts
}

fn images(map: &dyn AnnulusMap, pts: &[LiftPoint]) -> Result<Vec<LiftPoint>> {
    Ok(pts.iter().map(|p| map.lift_eval(*p)).collect::<annulus_twist::Result<_>>()?)
}

fn curves(args: CurvesArgs, out: &Path) -> Result<Outcome> {
    let (spec, map) = build(&args.map)?;
    let g = &args.grid;
    let set = extract_regular(map.clone(), g.phi, g.nx, g.ny, RETRIES)?;
    let mut scene = SvgScene::annulus();
    for c in &set.components {
        scene.annulus_curve("curves", &c.vertices, c.closed);
    }
    for c in &set.components {
        scene.annulus_curve("images", &images(map.as_ref(), &c.vertices)?, c.closed);
    }
    let cands = fixed_candidates(&set);
    for p in &cands {
        let q = p.project();
        scene.point("points", (q.x, q.y), 3.0);
    }
    output::text(out, "curves.csv", &set.components_csv())?;
    output::svg(out, "curves.svg", &scene)?;
    let mut body = set.summary_json();
    body["spec"] = spec;
    body["grid"] = json!([g.nx, g.ny]);
    body["components"] = components_json(&set);
    body["fixed_point_candidates"] = cands.iter().map(|p| {
        let q = p.project();
        json!([output::seam(q.x), q.y])
    }).collect();
    output::report(out, "curves", "invariant-curves", body)?;
    Ok(Outcome::Success)
}

/// Scan outcome: records, or a report explaining why none were certified.
fn scan(map: SharedMap, g: &GridArgs) -> Result<Result<FixedPointScan, Value>> {
    match find_all_fixed_points(map, g.phi, (g.nx, g.ny)) {
        Ok(s) => Ok(Ok(s)),
        Err(Error::TheoremViolationWitness(v)) => Ok(Err(json!({
            "status": "witness",
            "message": "all components monotone and fewer than two fixed points; the closed loop changes measure",
            "verdict": serde_json::to_value(*v)?,
        }))),
        Err(Error::TooFewFixedPoints { found }) => {
            Ok(Err(json!({"status": "too_few_fixed_points", "found": found})))
        }
        Err(e) => Err(e.into()),
    }
}

fn fixed_points(args: FixedArgs, out: &Path) -> Result<Outcome> {
    let (spec, map) = build(&args.map)?;
    let hyp = if args.skip_check {
        None
    } else {
        Some(hypotheses(map.as_ref(), args.twist_samples, args.measure_samples)?)
    };
    let (hyp_ok, hyp_json) = match &hyp {
        None => (true, Value::Null),
        Some(Ok(r)) => (r.ok(), serde_json::to_value(r)?),
        Some(Err(v)) => {
            let mut body = v.clone();
            body["spec"] = spec;
            output::report(out, "fixed_points", "fixed-points", body)?;
            return Ok(Outcome::HypothesisFailure);
        }
    };
    let mut body = match scan(map.clone(), &args.grid)? {
        Ok(s) => {
            let mut scene = SvgScene::annulus();
            for c in &s.invariant_set.components {
                let back: Vec<LiftPoint> = c.vertices.iter().map(|p| t_invert(*p, s.phi)).collect();
                scene.annulus_curve("curves", &back, c.closed);
            }
            let mut rows = Vec::new();
            for r in &s.records {
                scene.point("points", (r.position.x, r.position.y), 4.0);
                rows.push(vec![
                    r.position.x.into(),
                    r.position.y.into(),
                    CsvCell::from(r.index as i64),
                    r.multiplier_trace.into(),
                    CsvCell::from(serde_json::to_value(r.class)?.as_str().unwrap_or("")),
                ]);
            }
            output::svg(out, "fixed_points.svg", &scene)?;
            output::text(out, "fixed_points.csv", &csv_table(&["x", "y", "index", "trace", "class"], rows))?;
            let mut b = s.to_json();
            b["status"] = json!(if hyp_ok { "ok" } else { "hypothesis_failure" });
            b
        }
        Err(b) => b,
    };
    let ok = hyp_ok && body["status"] == "ok";
    body["spec"] = spec;
    body["hypotheses"] = hyp_json;
    output::report(out, "fixed_points", "fixed-points", body)?;
    Ok(Outcome::from_ok(ok))
}

fn path(args: PathArgs, out: &Path) -> Result<Outcome> {
    let (spec, map) = build(&args.map)?;
    let g = &args.grid;
    let (set, gmap) = extract_conjugated(map, g.phi, g.nx, g.ny, RETRIES)?;
    let mut scene = SvgScene::annulus();
    for c in &set.components {
        scene.annulus_curve("curves", &c.vertices, c.closed);
        scene.annulus_curve("images", &images(gmap.as_ref(), &c.vertices)?, c.closed);
    }
    let result = all_critical_points(&set, default_eps_window(&set), Some(gmap.as_ref()))
        .and_then(|cps| find_closed_loop(&set, &cps));
    let mut body = match result {
        Ok(path) => {
            let verdict = measure_verdict(&path, gmap.as_ref(), &|p| gmap.invariant_density(p))?;
            let poly = path.polyline();
            scene.annulus_curve("paths", &poly, true);
            scene.annulus_curve("path-images", &images(gmap.as_ref(), &poly)?, true);
            for c in &path.visited_criticals {
                scene.point("points", (c.position.x, c.position.y), 3.0);
            }
            let tol = gmap.tier().measure_tol();
            let witness = verdict.crossover_found || verdict.difference.abs() > tol;
            json!({
                "status": if witness { "witness" } else { "no_witness" },
                "segments": path.segments_json(),
                "component_sequence": path.component_sequence(),
                "winding": path.winding,
                "visited_criticals": path.visited_criticals.len(),
                "verdict": serde_json::to_value(verdict)?,
                "measure_tol": tol,
            })
        }
        Err(e @ (Error::MixedComponent(_) | Error::CrossoverDetected(_) | Error::ZeroWindingLoop)) => {
            let status = match e {
                Error::MixedComponent(_) => "mixed_component",
                Error::CrossoverDetected(_) => "crossover",
                _ => "zero_winding",
            };
            json!({"status": status, "message": e.to_string()})
        }
        Err(e) => return Err(e.into()),
    };
    output::svg(out, "path.svg", &scene)?;
    let ok = body["status"] == "no_witness";
    body["spec"] = spec;
    body["phi"] = json!(set.phi);
    body["components"] = components_json(&set);
    output::report(out, "path", "path", body)?;
    Ok(Outcome::from_ok(ok))
}

fn pick_center(records: &[FixedPointRecord], near: Option<[f64; 2]>) -> Option<FixedPointRecord> {
    match near {
        Some([x, y]) => {
            let target = annulus_twist::AnnulusPoint::new(x, y);
            records
                .iter()
                .min_by(|a, b| a.position.distance(&target).total_cmp(&b.position.distance(&target)))
                .copied()
        }
        None => records.iter().find(|r| r.index < 0).or(records.first()).copied(),
    }
}

fn audit(args: AuditArgs, out: &Path) -> Result<Outcome> {
    let (spec, map) = build(&args.map)?;
    let g = &args.grid;
    let s = match scan(map.clone(), g)? {
        Ok(s) => s,
        Err(mut body) => {
            body["spec"] = spec;
            output::report(out, "audit", "audit", body)?;
            return Ok(Outcome::HypothesisFailure);
        }
    };
    let center = pick_center(&s.records, args.center).context("no fixed point to audit")?;
    let ctx = AuditContext::new(map, g.phi, (g.nx, g.ny), args.det_grid)?;
    let audits = ctx.audit_halving(&center, args.epsilon, args.halvings)?;
    let last = audits.last().context("audit produced no rounds")?;
    let ok = last.verdict;
    let body = json!({
        "status": if ok { "ok" } else { "unresolved" },
        "spec": spec,
        "phi": ctx.phi,
        "center": center.to_json(),
        "halvings": audits.len() - 1,
        "final_epsilon": last.epsilon,
        "audits": audits.iter().map(|a| a.to_json()).collect::<Vec<_>>(),
    });
    output::report(out, "audit", "audit", body)?;
    Ok(Outcome::from_ok(ok))
}
