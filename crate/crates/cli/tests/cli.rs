use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const HAM: &str = r#"{"name":"hamiltonian_twist","epsilon":0.1}"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn twistfp(out: &Path, args: &[&str]) -> Run {
    let o = Command::new(env!("CARGO_BIN_EXE_twistfp"))
        .env("TWISTFP_OUT", out)
        .args(args)
        .output()
        .expect("spawn twistfp");
    Run {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

/// Parses `<stem>.json`, checks it equals stdout and validates it against its schema.
fn report(out: &Path, run: &Run, stem: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{stem}.json"))).unwrap();
    assert_eq!(text, run.stdout, "stdout differs from {stem}.json");
    let v: Value = serde_json::from_str(&text).unwrap();
    let id = v["schema"].as_str().expect("schema field");
    let name = id.strip_prefix("twistfp/").and_then(|s| s.strip_suffix("/v1")).unwrap();
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(schema_dir().join(format!("{name}.v1.json"))).unwrap()).unwrap();
    let validator = jsonschema::draft202012::new(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(&v).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{stem}.json: {errors:?}");
    v
}

#[test]
fn every_schema_compiles() {
    let mut n = 0;
    for entry in std::fs::read_dir(schema_dir()).unwrap() {
        let path = entry.unwrap().path();
        let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(jsonschema::draft202012::meta::is_valid(&schema), "{}", path.display());
        n += 1;
    }
    assert_eq!(n, 9);
}

#[test]
fn shear_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["annulus", "check", "--map", r#"{"name":"shear"}"#]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = report(dir.path(), &r, "check");
    assert_eq!(v["twist_ok"], true);
    assert_eq!(v["measure_ok"], true);
    assert_eq!(v["status"], "ok");
}

#[test]
fn bump_drift_fails_the_measure_check() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["annulus", "check", "--map", r#"{"name":"bump_drift"}"#]);
    assert_eq!(r.code, 2);
    let v = report(dir.path(), &r, "check");
    assert_eq!(v["twist_ok"], true);
    assert_eq!(v["measure_ok"], false);
}

#[test]
fn hamiltonian_fixed_points() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["annulus", "fixed-points", "--map", HAM]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = report(dir.path(), &r, "fixed_points");
    assert_eq!(v["n_fixed_points"], 2);
    assert_eq!(v["index_sum"], 0);
    let classes: Vec<&str> = v["records"].as_array().unwrap().iter().map(|r| r["class"].as_str().unwrap()).collect();
    assert_eq!(classes, ["hyperbolic", "elliptic"]);
    let csv = std::fs::read_to_string(dir.path().join("fixed_points.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,index,trace,class"));
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("fixed_points.svg").exists());
}

#[test]
fn bump_drift_fixed_points_give_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["annulus", "fixed-points", "--map", r#"{"name":"bump_drift"}"#]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    let v = report(dir.path(), &r, "fixed_points");
    assert_eq!(v["status"], "witness");
    assert!(v["verdict"]["difference"].as_f64().unwrap().abs() > 1e-3);
    assert_eq!(v["verdict"]["crossover_found"], false);
}

#[test]
fn folded_drift_path_is_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["annulus", "path", "--map", r#"{"name":"folded_drift"}"#, "--phi", "0.7"]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    let v = report(dir.path(), &r, "path");
    assert_eq!(v["status"], "witness");
    assert_eq!(v["winding"].as_i64().unwrap().abs(), 1);
    assert_eq!(v["visited_criticals"], 2);
    let svg = std::fs::read_to_string(dir.path().join("path.svg")).unwrap();
    for class in ["curves", "images", "paths", "path-images"] {
        assert!(svg.contains(&format!("<g class=\"{class}\">")), "{class}");
    }
}

#[test]
fn twist_map_path_reports_mixed_component() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["annulus", "path", "--map", HAM]);
    assert_eq!(r.code, 2);
    assert_eq!(report(dir.path(), &r, "path")["status"], "mixed_component");
}

#[test]
fn hamiltonian_audit_resolves() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["annulus", "audit", "--map", HAM, "--det-grid", "64"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = report(dir.path(), &r, "audit");
    assert_eq!(v["center"]["index"], -1);
    let last = v["audits"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["verdict"], true);
    let (k, m, mu) = (last["K"].as_f64().unwrap(), last["M"].as_f64().unwrap(), last["mu_ball"].as_f64().unwrap());
    assert!(mu * m < k);
}

#[test]
fn invariant_curves_of_a_conjugated_shear() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["annulus", "invariant-curves", "--map", r#"{"name":"conjugated_shear"}"#]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = report(dir.path(), &r, "curves");
    assert_eq!(v["total_winding"], 1);
    assert_eq!(v["components"][0]["pointwise_fixed"], true);
    let csv = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("component_id,k,x,y,u"));
}

#[test]
fn rotation_inside_the_six_cycle_band() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["pendulum", "rotation", "--a", "0.1", "--seed", "1,0", "--iters", "600"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = report(dir.path(), &r, "rotation");
    let rho = v["value"].as_f64().unwrap();
    assert!(rho > 0.0 && rho < 1.0 / 6.0, "{rho}");
}

#[test]
fn newton_finds_six_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["pendulum", "newton", "--angles", "24", "--radii", "4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = report(dir.path(), &r, "cycles");
    assert!(v["n_saddle"].as_u64().unwrap() >= 1);
    assert!(v["n_center"].as_u64().unwrap() >= 1);
    for c in v["cycles"].as_array().unwrap() {
        assert_eq!(c["points"].as_array().unwrap().len(), 6);
    }
}

#[test]
fn chart_between_invariant_curves() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["pendulum", "chart", "--m", "128", "--iterations", "800"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = report(dir.path(), &r, "chart");
    assert!(v["min_gap"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(dir.path().join("chart.csv")).unwrap();
    assert_eq!(csv.lines().count(), 129);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["pendulum", "orbits", "--a", "0.05", "--iters", "20", "--seed", "1,0", "--seed", "0,2.2"];
    assert_eq!(twistfp(a.path(), &args).code, 0);
    assert_eq!(twistfp(b.path(), &args).code, 0);
    for f in ["orbits.csv", "orbits.json", "orbits.svg"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.path().join("orbits.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 21);
    assert!(csv.lines().nth(1).unwrap().ends_with(",1.000000,0.000000"));
}

#[test]
fn out_flag_overrides_the_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let flag = flag_dir.path().to_str().unwrap();
    let r = twistfp(env_dir.path(), &["--out", flag, "pendulum", "rotation", "--iters", "100"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(flag_dir.path().join("rotation.json").exists());
    assert!(!env_dir.path().join("rotation.json").exists());
}

#[test]
fn usage_and_internal_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["annulus", "frobnicate"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("frobnicate"));
    let r = twistfp(dir.path(), &["annulus", "check", "--map", r#"{"name":"no_such_map"}"#]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("unknown map"));
    let r = twistfp(dir.path(), &["annulus", "check", "--map", "{not json"]);
    assert_eq!(r.code, 1);
    let r = twistfp(dir.path(), &["annulus", "fixed-points", "--nx", "8"]);
    assert_eq!(r.code, 1);
    let r = twistfp(dir.path(), &["pendulum", "rotation", "--a", "-1"]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.is_empty());
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let r = twistfp(dir.path(), &["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("pendulum") && r.stdout.contains("annulus"));
}
