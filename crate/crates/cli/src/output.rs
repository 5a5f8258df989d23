use std::path::Path;

use anyhow::{Context, Result};
use annulus_twist::io::{emit_svg, json_string, SvgScene};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Hypotheses not satisfied, or a witness against them was produced.
    HypothesisFailure,
}

impl Outcome {
    pub fn from_ok(ok: bool) -> Self {
        if ok {
            Outcome::Success
        } else {
            Outcome::HypothesisFailure
        }
    }
}

/// Stamps the schema id, writes `<stem>.json` and echoes it on stdout.
pub fn report(out: &Path, stem: &str, schema: &str, mut body: Value) -> Result<()> {
    if let Value::Object(map) = &mut body {
        map.insert("schema".into(), Value::String(format!("twistfp/{schema}/v1")));
    }
    let text = json_string(&body);
    let path = out.join(format!("{stem}.json"));
    std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    print!("{text}");
    Ok(())
}

pub fn text(out: &Path, name: &str, content: &str) -> Result<()> {
    let path = out.join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))
}

pub fn svg(out: &Path, name: &str, scene: &SvgScene) -> Result<()> {
    let path = out.join(name);
    emit_svg(scene, &path).with_context(|| format!("writing {}", path.display()))
}

/// Parses `x,y`.
pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected `x,y`, got `{s}`"));
    }
    let x = parts[0].parse::<f64>().map_err(|e| format!("{e} in `{s}`"))?;
    let y = parts[1].parse::<f64>().map_err(|e| format!("{e} in `{s}`"))?;
    Ok([x, y])
}

/// Angle in `[0, 1)` that stays there after six-decimal rounding.
pub fn seam(x: f64) -> f64 {
    if x >= 1.0 - 5e-7 {
        0.0
    } else {
        x
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

pub fn grid_size(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 32 {
        Ok(v)
    } else {
        Err(format!("grid sizes must be at least 32, got {v}"))
    }
}
