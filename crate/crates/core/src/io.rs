//! Deterministic text artifacts: fixed-precision numbers, canonical JSON and layered SVG.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::geometry::{wrap01, LiftPoint};

/// Six decimals, never `-0.000000`.
pub fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Rounds every float in a JSON tree to six decimals. Under keys naming a tolerance, residual,
/// error, deviation or drift, values below `1e-3` keep six significant digits instead so they survive.
/// Integers and non-numbers are untouched.
pub fn canonical_json(v: &Value) -> Value {
    canonical(v, false)
}

fn keeps_small(key: &str) -> bool {
    ["tol", "residual", "error", "deviation", "drift"].iter().any(|k| key.contains(k))
}

fn canonical(v: &Value, small: bool) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let r = if small && x != 0.0 && x.abs() < 1e-3 {
                format!("{x:.5e}").parse().unwrap_or(x)
            } else {
                (x * 1e6).round() / 1e6
            };
            // round() can produce -0.0
            serde_json::json!(if r == 0.0 { 0.0 } else { r })
        }
        Value::Array(a) => Value::Array(a.iter().map(|x| canonical(x, small)).collect()),
        Value::Object(o) => Value::Object(o.iter().map(|(k, x)| (k.clone(), canonical(x, small || keeps_small(k)))).collect()),
        other => other.clone(),
    }
}

/// Pretty canonical JSON with a trailing newline.
pub fn json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(&canonical_json(v)).unwrap_or_else(|_| "null".into());
    s.push('\n');
    s
}

pub fn write_json(path: &Path, v: &Value) -> std::io::Result<()> {
    std::fs::write(path, json_string(v))
}

/// CSV with a header line and six-decimal float cells.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<CsvCell>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| c.render()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub enum CsvCell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl CsvCell {
    fn render(self) -> String {
        match self {
            CsvCell::Int(i) => i.to_string(),
            CsvCell::Float(f) => fmt6(f),
            CsvCell::Text(t) => t,
        }
    }
}

impl From<f64> for CsvCell {
    fn from(v: f64) -> Self {
        CsvCell::Float(v)
    }
}

impl From<usize> for CsvCell {
    fn from(v: usize) -> Self {
        CsvCell::Int(v as i64)
    }
}

impl From<i64> for CsvCell {
    fn from(v: i64) -> Self {
        CsvCell::Int(v)
    }
}

impl From<&str> for CsvCell {
    fn from(v: &str) -> Self {
        CsvCell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SvgItem {
    Polyline { points: Vec<(f64, f64)>, closed: bool },
    Point { at: (f64, f64), radius: f64 },
}

/// One style class of drawing.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgLayer {
    pub class: String,
    pub items: Vec<SvgItem>,
}

/// Layered scene over a data window `[xmin, xmax] × [ymin, ymax]`, drawn with `y` up.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgScene {
    pub window: [f64; 4],
    pub pixels: (u32, u32),
    pub layers: Vec<SvgLayer>,
}

const STYLE: &str = ".curves{fill:none;stroke:#1f4eb4;stroke-width:1.5}\
.images{fill:none;stroke:#c8281e;stroke-width:1.2}\
.paths{fill:none;stroke:#e0a800;stroke-width:2}\
.path-images{fill:none;stroke:#2e8b57;stroke-width:1.2;stroke-dasharray:4 3}\
.orbits{fill:#1f4eb4;stroke:none}\
.points{fill:#000;stroke:none}\
.boundary{fill:none;stroke:#888;stroke-width:1}";

impl SvgScene {
    /// The unit square of annulus coordinates.
    pub fn annulus() -> Self {
        Self { window: [0.0, 1.0, 0.0, 1.0], pixels: (800, 400), layers: Vec::new() }
    }

    pub fn plane(window: [f64; 4]) -> Self {
        let aspect = (window[3] - window[2]) / (window[1] - window[0]);
        Self { window, pixels: (600, (600.0 * aspect).round().max(1.0) as u32), layers: Vec::new() }
    }

    /// Layer with the given class, created on first use (order of first use is kept).
    pub fn layer(&mut self, class: &str) -> &mut SvgLayer {
        if let Some(i) = self.layers.iter().position(|l| l.class == class) {
            return &mut self.layers[i];
        }
        self.layers.push(SvgLayer { class: class.into(), items: Vec::new() });
        self.layers.last_mut().expect("just pushed")
    }

    pub fn polyline(&mut self, class: &str, points: Vec<(f64, f64)>, closed: bool) {
        self.layer(class).items.push(SvgItem::Polyline { points, closed });
    }

    pub fn point(&mut self, class: &str, at: (f64, f64), radius: f64) {
        self.layer(class).items.push(SvgItem::Point { at, radius });
    }

    /// Adds an unwrapped annulus curve, cut wherever it crosses the seam `x ∈ ℤ`.
    pub fn annulus_curve(&mut self, class: &str, points: &[LiftPoint], closed: bool) {
        let mut pts: Vec<LiftPoint> = points.to_vec();
        if closed {
            if let Some(&first) = points.first() {
                let last = points[points.len() - 1];
                pts.push(LiftPoint::new(last.x + crate::geometry::wrap_signed(first.x - last.x), first.y));
            }
        }
        for piece in split_periodic(&pts) {
            self.polyline(class, piece, false);
        }
    }

    fn to_px(&self, p: (f64, f64)) -> (f64, f64) {
        let [x0, x1, y0, y1] = self.window;
        let (w, h) = (self.pixels.0 as f64, self.pixels.1 as f64);
        ((p.0 - x0) / (x1 - x0) * w, (y1 - p.1) / (y1 - y0) * h)
    }

    pub fn render(&self) -> String {
        let (w, h) = self.pixels;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        );
        let _ = writeln!(s, "<style>{STYLE}</style>");
        for layer in &self.layers {
            let _ = writeln!(s, "<g class=\"{}\">", layer.class);
            for item in &layer.items {
                match item {
                    SvgItem::Polyline { points, closed } => {
                        let coords: Vec<String> = points
                            .iter()
                            .map(|p| {
                                let (x, y) = self.to_px(*p);
                                format!("{},{}", fmt6(x), fmt6(y))
                            })
                            .collect();
                        let tag = if *closed { "polygon" } else { "polyline" };
                        let _ = writeln!(s, "<{tag} points=\"{}\"/>", coords.join(" "));
                    }
                    SvgItem::Point { at, radius } => {
                        let (x, y) = self.to_px(*at);
                        let _ = writeln!(s, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>", fmt6(x), fmt6(y), fmt6(*radius));
                    }
                }
            }
            let _ = writeln!(s, "</g>");
        }
        s.push_str("</svg>\n");
        s
    }
}

pub fn emit_svg(scene: &SvgScene, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, scene.render())
}

/// Projects an unwrapped curve to `[0,1)` in `x`, splitting at seam crossings. Each seam
/// crossing gets an interpolated end point on both sides.
pub fn split_periodic(points: &[LiftPoint]) -> Vec<Vec<(f64, f64)>> {
    let mut out: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut cur: Vec<(f64, f64)> = Vec::new();
    for (k, p) in points.iter().enumerate() {
        if k > 0 {
            let a = points[k - 1];
            let (fa, fb) = (a.x.floor(), p.x.floor());
            if fa != fb {
                // crossing the seam at x = max(fa, fb)
                let seam = fa.max(fb);
                let s = (seam - a.x) / (p.x - a.x);
                let y = a.y + s * (p.y - a.y);
                let (end, start) = if p.x > a.x { (1.0, 0.0) } else { (0.0, 1.0) };
                cur.push((end, y));
                out.push(std::mem::take(&mut cur));
                cur.push((start, y));
            }
        }
        cur.push((wrap01(p.x), p.y));
    }
    if cur.len() > 1 {
        out.push(cur);
    }
    out.retain(|c| c.len() > 1);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_is_normalised() {
        assert_eq!(fmt6(-1e-9), "0.000000");
        assert_eq!(fmt6(0.1234567), "0.123457");
    }

    #[test]
    fn canonical_keeps_small_values() {
        let v = canonical_json(&serde_json::json!({"a": 0.123456789, "residual": 1.23456789e-13, "x": 2e-16, "n": 3}));
        assert_eq!(v["a"], serde_json::json!(0.123457));
        assert_eq!(v["residual"], serde_json::json!(1.23457e-13));
        assert_eq!(v["x"], serde_json::json!(0.0));
        assert_eq!(v["n"], serde_json::json!(3));
    }

    #[test]
    fn empty_scene() {
        let s = SvgScene::annulus().render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(!s.contains("<g "));
    }

    #[test]
    fn seam_split() {
        let pts = [LiftPoint::new(0.8, 0.5), LiftPoint::new(1.2, 0.5)];
        let pieces = split_periodic(&pts);
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[0].last(), Some(&(1.0, 0.5)));
        assert_eq!(pieces[1][0], (0.0, 0.5));
    }
}
