//! The invariant-curve set `ℐ = F_φ⁻¹(0)`, `F_φ = φΔ₁ - Δ₂`, extracted by marching squares on
//! the periodic grid and assembled into oriented closed components.

mod conjugate;
mod winding;

use rayon::prelude::*;
use serde::Serialize;

pub use conjugate::{t_apply, t_conjugate, t_invert, TConjugated};
pub use winding::{annulus_winding, boundary_winding, planar_winding, winding_number, Polyline};

use crate::io::fmt6;
use crate::error::{Error, Result};
use crate::geometry::{wrap_signed, AnnulusPoint, LiftPoint};
use crate::map::{halton, SharedMap};

/// Default bisection target for contour vertices.
pub const REFINE_TOL: f64 = 1e-10;
/// Default threshold on `|∇F|` below which the zero set is not treated as regular.
pub const GRAD_TOL: f64 = 1e-4;
/// Samples with `|F|` below this count as vanishing for the degeneracy test.
pub const ZERO_TOL: f64 = 1e-12;

/// `F = wx·Δ₁ - wy·Δ₂` sampled on `nx` periodic columns `x_i = i/nx` and `ny` rows
/// `y_j = j/(ny-1)` (both boundary circles included).
#[derive(Clone)]
pub struct DisplacementField {
    pub map: SharedMap,
    pub phi: f64,
    pub wx: f64,
    pub wy: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: `values[j * nx + i]`.
    pub values: Vec<f64>,
}

impl std::fmt::Debug for DisplacementField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DisplacementField")
            .field("map", &self.map.name())
            .field("phi", &self.phi)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

impl DisplacementField {
    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 / (self.ny - 1) as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i % self.nx]
    }

    /// `F` evaluated through the map (not the grid).
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let d = self.map.displacement(LiftPoint::new(x, y))?;
        Ok(self.wx * d[0] - self.wy * d[1])
    }

    /// Central-difference gradient with steps of half a grid cell (one-sided at the boundary).
    pub fn gradient(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        let hx = 0.5 / self.nx as f64;
        let hy = 0.5 / (self.ny - 1) as f64;
        let gx = (self.eval(x + hx, y)? - self.eval(x - hx, y)?) / (2.0 * hx);
        let (y0, y1) = ((y - hy).max(0.0), (y + hy).min(1.0));
        let gy = (self.eval(x, y1)? - self.eval(x, y0)?) / (y1 - y0);
        Ok([gx, gy])
    }

    fn sample(map: SharedMap, phi: f64, wx: f64, wy: f64, nx: usize, ny: usize) -> Result<Self> {
        Ok(DisplacementGrid::sample(map, nx, ny)?.combine(phi, wx, wy))
    }
}

/// Lifted displacement `(Δ₁, Δ₂)` on the grid, independent of `φ`; several fields can be
/// formed from one (expensive) sampling pass.
#[derive(Clone)]
pub struct DisplacementGrid {
    pub map: SharedMap,
    pub nx: usize,
    pub ny: usize,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl DisplacementGrid {
    pub fn sample(map: SharedMap, nx: usize, ny: usize) -> Result<Self> {
        if nx < 32 || ny < 32 {
            return Err(Error::InvalidArgument(format!("grid must be at least 32×32, got {nx}×{ny}")));
        }
        let rows: Vec<Vec<[f64; 2]>> = (0..ny)
            .into_par_iter()
            .map(|j| {
                let y = j as f64 / (ny - 1) as f64;
                (0..nx)
                    .map(|i| map.displacement(LiftPoint::new(i as f64 / nx as f64, y)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let flat: Vec<[f64; 2]> = rows.into_iter().flatten().collect();
        Ok(Self {
            map,
            nx,
            ny,
            d1: flat.iter().map(|d| d[0]).collect(),
            d2: flat.iter().map(|d| d[1]).collect(),
        })
    }

    /// `F = wx·Δ₁ - wy·Δ₂`.
    pub fn combine(&self, phi: f64, wx: f64, wy: f64) -> DisplacementField {
        DisplacementField {
            map: self.map.clone(),
            phi,
            wx,
            wy,
            nx: self.nx,
            ny: self.ny,
            values: self.d1.iter().zip(&self.d2).map(|(a, b)| wx * a - wy * b).collect(),
        }
    }

    pub fn field(&self, phi: f64) -> Result<DisplacementField> {
        check_phi(phi)?;
        Ok(self.combine(phi, phi, 1.0))
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if phi > 0.0 && phi.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("phi must be positive, got {phi}")))
    }
}

/// Samples `F_φ = φΔ₁ - Δ₂` using the map's own lift (normalise the map first for twist maps).
pub fn sample_f(map: SharedMap, phi: f64, nx: usize, ny: usize) -> Result<DisplacementField> {
    check_phi(phi)?;
    DisplacementField::sample(map, phi, phi, 1.0, nx, ny)
}

/// Samples the horizontal displacement `Δ₁` alone: the zero set of `F_φ` read in T-coordinates.
pub fn sample_horizontal(map: SharedMap, phi: f64, nx: usize, ny: usize) -> Result<DisplacementField> {
    DisplacementField::sample(map, phi, 1.0, 0.0, nx, ny)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum USign {
    Positive,
    Negative,
    /// `f₂ - y` changes sign (or vanishes identically) along the component.
    Mixed,
}

impl USign {
    pub fn value(self) -> Option<i32> {
        match self {
            USign::Positive => Some(1),
            USign::Negative => Some(-1),
            USign::Mixed => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            USign::Positive => "+1",
            USign::Negative => "-1",
            USign::Mixed => "mixed",
        }
    }
}

/// One connected piece of `ℐ`, traversed with `{F < 0}` on the right.
#[derive(Debug, Clone, Serialize)]
pub struct Component {
    pub id: usize,
    /// Unwrapped polyline; the closing segment back to the first vertex is implicit.
    pub vertices: Vec<LiftPoint>,
    pub closed: bool,
    pub winding: i64,
    pub u: USign,
    /// `f₂ - y` at each vertex.
    pub vertical_disp: Vec<f64>,
    pub min_grad: f64,
}

impl Component {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn annulus_points(&self) -> Vec<AnnulusPoint> {
        self.vertices.iter().map(|p| p.project()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantSet {
    pub components: Vec<Component>,
    pub phi: f64,
    pub grid_resolution: (usize, usize),
    pub regular: bool,
    pub min_grad: f64,
    pub grad_tol: f64,
}

impl InvariantSet {
    pub fn total_winding(&self) -> i64 {
        self.components.iter().filter(|c| c.closed).map(|c| c.winding).sum()
    }

    pub fn windings(&self) -> Vec<i64> {
        self.components.iter().map(|c| c.winding).collect()
    }

    pub fn component(&self, id: usize) -> Option<&Component> {
        self.components.iter().find(|c| c.id == id)
    }

    /// Size of one grid cell in `x`.
    pub fn cell(&self) -> f64 {
        1.0 / self.grid_resolution.0 as f64
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "phi": self.phi,
            "n_components": self.components.len(),
            "windings": self.windings(),
            "total_winding": self.total_winding(),
            "regular": self.regular,
        })
    }

    /// CSV `component_id,k,x,y,u` with `x` reduced into `[0, 1)`.
    pub fn components_csv(&self) -> String {
        let mut out = String::from("component_id,k,x,y,u\n");
        for c in &self.components {
            for (k, v) in c.vertices.iter().enumerate() {
                let p = v.project();
                out.push_str(&format!("{},{},{},{},{}\n", c.id, k, fmt6(p.x), fmt6(p.y), c.u.label()));
            }
        }
        out
    }
}

// Edge ids: horizontal edge (i,j)→(i+1,j) is 2(j·nx+i), vertical edge (i,j)→(i,j+1) is 2(j·nx+i)+1.
fn h_edge(nx: usize, i: usize, j: usize) -> usize {
    2 * (j * nx + i % nx)
}

fn v_edge(nx: usize, i: usize, j: usize) -> usize {
    2 * (j * nx + i % nx) + 1
}

/// Root of `F` on the segment `a → b` (values `fa`, `fb` of opposite sign) by Illinois false position.
fn refine_root(field: &DisplacementField, a: LiftPoint, b: LiftPoint, fa: f64, fb: f64, tol: f64) -> Result<LiftPoint> {
    let at = |s: f64| LiftPoint::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let (mut lo, mut hi, mut flo, mut fhi) = (0.0_f64, 1.0_f64, fa, fb);
    let mut side = 0;
    let mut s = 0.5;
    for _ in 0..200 {
        s = (lo * fhi - hi * flo) / (fhi - flo);
        if !(s > lo && s < hi) {
            s = 0.5 * (lo + hi);
        }
        let p = at(s);
        let fs = field.eval(p.x, p.y)?;
        if fs.abs() < tol || hi - lo < 1e-15 {
            break;
        }
        if (fs < 0.0) == (flo < 0.0) {
            lo = s;
            flo = fs;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = s;
            fhi = fs;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(at(s))
}

/// Marching squares with centre-sample saddle disambiguation and root refinement on the true
/// field. Components are ordered by their smallest grid edge.
pub fn extract_components(field: &DisplacementField, refine_tol: f64) -> Result<InvariantSet> {
    extract_components_with(field, refine_tol, GRAD_TOL)
}

pub fn extract_components_with(field: &DisplacementField, refine_tol: f64, grad_tol: f64) -> Result<InvariantSet> {
    if !(refine_tol > 0.0) {
        return Err(Error::InvalidArgument("refine_tol must be positive".into()));
    }
    let (nx, ny) = (field.nx, field.ny);
    let vanishing = field.values.iter().filter(|v| v.abs() < ZERO_TOL).count();
    let fraction = vanishing as f64 / field.values.len() as f64;
    if fraction >= 0.05 {
        return Err(Error::DegenerateField { fraction });
    }
    let pos = |i: usize, j: usize| field.at(i, j) >= 0.0;

    // edges whose endpoints differ in sign
    let mut edges: Vec<(usize, LiftPoint, LiftPoint, f64, f64)> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let p = LiftPoint::new(field.x(i), field.y(j));
            if pos(i, j) != pos(i + 1, j) {
                let q = LiftPoint::new(field.x(i) + 1.0 / nx as f64, field.y(j));
                edges.push((h_edge(nx, i, j), p, q, field.at(i, j), field.at(i + 1, j)));
            }
            if j + 1 < ny && pos(i, j) != pos(i, j + 1) {
                let q = LiftPoint::new(field.x(i), field.y(j + 1));
                edges.push((v_edge(nx, i, j), p, q, field.at(i, j), field.at(i, j + 1)));
            }
        }
    }
    let roots: Vec<(usize, LiftPoint)> = edges
        .par_iter()
        .map(|&(id, a, b, fa, fb)| Ok((id, refine_root(field, a, b, fa, fb, refine_tol)?)))
        .collect::<Result<_>>()?;
    let n_ids = 2 * nx * ny;
    let mut point: Vec<Option<LiftPoint>> = vec![None; n_ids];
    for (id, p) in roots {
        point[id] = Some(p);
    }

    // oriented segments: start at the edge where the counter-clockwise cell boundary goes from
    // non-negative to negative, end where it returns
    const NONE: usize = usize::MAX;
    let mut next = vec![NONE; n_ids];
    let mut has_prev = vec![false; n_ids];
    for j in 0..ny - 1 {
        for i in 0..nx {
            let s = [pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1)];
            let n_pos = s.iter().filter(|b| **b).count();
            if n_pos == 0 || n_pos == 4 {
                continue;
            }
            let e = [h_edge(nx, i, j), v_edge(nx, i + 1, j), h_edge(nx, i, j + 1), v_edge(nx, i, j)];
            let mut link = |from: usize, to: usize| {
                next[e[from]] = e[to];
                has_prev[e[to]] = true;
            };
            let saddle = n_pos == 2 && s[0] == s[2];
            if saddle {
                let cx = field.x(i) + 0.5 / nx as f64;
                let cy = 0.5 * (field.y(j) + field.y(j + 1));
                let centre_pos = field.eval(cx, cy)? >= 0.0;
                for k in 0..4 {
                    let prev = (k + 3) % 4;
                    if centre_pos && !s[k] {
                        link(prev, k);
                    } else if !centre_pos && s[k] {
                        link(k, prev);
                    }
                }
            } else {
                let down = (0..4).find(|&k| s[k] && !s[(k + 1) % 4]).expect("sign change");
                let up = (0..4).find(|&k| !s[k] && s[(k + 1) % 4]).expect("sign change");
                link(down, up);
            }
        }
    }

    // chains: open ones first (they start on a boundary row), then closed loops
    let mut visited = vec![false; n_ids];
    let mut chains: Vec<(Vec<usize>, bool)> = Vec::new();
    for id in 0..n_ids {
        if next[id] != NONE && !has_prev[id] && !visited[id] {
            let mut chain = Vec::new();
            let mut cur = id;
            while cur != NONE && !visited[cur] {
                visited[cur] = true;
                chain.push(cur);
                cur = next[cur];
            }
            chains.push((chain, false));
        }
    }
    for id in 0..n_ids {
        if next[id] != NONE && !visited[id] {
            let mut chain = Vec::new();
            let mut cur = id;
            while !visited[cur] {
                visited[cur] = true;
                chain.push(cur);
                cur = next[cur];
            }
            chains.push((chain, true));
        }
    }
    chains.sort_by_key(|(c, _)| c.iter().copied().min().unwrap_or(0));

    let mut components = Vec::with_capacity(chains.len());
    for (id, (chain, closed)) in chains.into_iter().enumerate() {
        let mut vertices: Vec<LiftPoint> = Vec::with_capacity(chain.len());
        for e in chain {
            let p = point[e].expect("refined crossing");
            let v = match vertices.last() {
                None => LiftPoint::new(crate::geometry::wrap01(p.x), p.y),
                Some(prev) => LiftPoint::new(prev.x + wrap_signed(p.x - prev.x), p.y),
            };
            vertices.push(v);
        }
        let winding = if closed { annulus_winding(&vertices) } else { 0 };
        components.push(finish_component(field, id, vertices, closed, winding)?);
    }
    let min_grad = components.iter().map(|c| c.min_grad).fold(f64::INFINITY, f64::min);
    Ok(InvariantSet {
        components,
        phi: field.phi,
        grid_resolution: (nx, ny),
        regular: min_grad > grad_tol,
        min_grad,
        grad_tol,
    })
}

fn finish_component(
    field: &DisplacementField,
    id: usize,
    vertices: Vec<LiftPoint>,
    closed: bool,
    winding: i64,
) -> Result<Component> {
    let evals: Vec<(f64, f64)> = vertices
        .par_iter()
        .map(|v| {
            let d = field.map.displacement(*v)?;
            let g = field.gradient(v.x, v.y)?;
            Ok((d[1], g[0].hypot(g[1])))
        })
        .collect::<Result<_>>()?;
    let vertical_disp: Vec<f64> = evals.iter().map(|e| e.0).collect();
    let min_grad = evals.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let has_pos = vertical_disp.iter().any(|d| *d > 0.0);
    let has_neg = vertical_disp.iter().any(|d| *d < 0.0);
    let u = match (has_pos, has_neg) {
        (true, false) => USign::Positive,
        (false, true) => USign::Negative,
        _ => USign::Mixed,
    };
    Ok(Component { id, vertices, closed, winding, u, vertical_disp, min_grad })
}

/// Quasi-random `φ` values in `[0.9φ, 1.1φ]` used when the zero set is not regular.
pub fn retry_phi(phi: f64, attempt: usize) -> f64 {
    phi * (0.9 + 0.2 * halton(attempt + 1, 5))
}

/// Samples and extracts `F_φ⁻¹(0)`, retrying with perturbed `φ` (see [`retry_phi`]) while the
/// zero set is not regular.
pub fn extract_regular(map: SharedMap, phi: f64, nx: usize, ny: usize, retries: usize) -> Result<InvariantSet> {
    check_phi(phi)?;
    let grid = DisplacementGrid::sample(map, nx, ny)?;
    let mut try_phi = phi;
    let mut worst = f64::INFINITY;
    for attempt in 0..=retries {
        let set = extract_components(&grid.field(try_phi)?, REFINE_TOL)?;
        if set.regular {
            return Ok(set);
        }
        worst = worst.min(set.min_grad);
        try_phi = retry_phi(phi, attempt);
    }
    Err(Error::NotRegular { min_grad: worst, retries })
}

/// The same zero set read in T-coordinates: `{g₁ = x}` for `g = T∘f∘T⁻¹`. Returns the
/// conjugated map alongside; a retry re-conjugates with the perturbed `φ`.
pub fn extract_conjugated(
    map: SharedMap,
    phi: f64,
    nx: usize,
    ny: usize,
    retries: usize,
) -> Result<(InvariantSet, SharedMap)> {
    check_phi(phi)?;
    let mut try_phi = phi;
    let mut worst = f64::INFINITY;
    for attempt in 0..=retries {
        let g = t_conjugate(map.clone(), try_phi)?;
        let set = extract_components(&sample_horizontal(g.clone(), try_phi, nx, ny)?, REFINE_TOL)?;
        if set.regular {
            return Ok((set, g));
        }
        worst = worst.min(set.min_grad);
        try_phi = retry_phi(phi, attempt);
    }
    Err(Error::NotRegular { min_grad: worst, retries })
}

/// Symmetric Hausdorff distance between two vertex sets on the cylinder.
pub fn hausdorff(a: &[AnnulusPoint], b: &[AnnulusPoint]) -> f64 {
    let one_sided = |p: &[AnnulusPoint], q: &[AnnulusPoint]| {
        p.par_iter()
            .map(|x| q.iter().map(|y| x.distance(y)).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// All vertices of all components, projected to the annulus.
pub fn all_vertices(set: &InvariantSet) -> Vec<AnnulusPoint> {
    set.components.iter().flat_map(|c| c.annulus_points()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{Identity, Shear};
    use std::sync::Arc;

    #[test]
    fn shear_gives_one_horizontal_circle() {
        let field = sample_f(Arc::new(Shear), 1.0, 64, 33).unwrap();
        let set = extract_components(&field, 1e-12).unwrap();
        assert_eq!(set.components.len(), 1);
        let c = &set.components[0];
        assert!(c.closed);
        assert_eq!(c.winding, 1);
        assert!(c.vertices.iter().all(|v| (v.y - 0.5).abs() < 1e-12));
        assert_eq!(c.u, USign::Mixed);
    }

    #[test]
    fn identity_is_degenerate() {
        let field = sample_f(Arc::new(Identity), 1.0, 32, 32).unwrap();
        assert!(matches!(extract_components(&field, 1e-10), Err(Error::DegenerateField { .. })));
    }

    #[test]
    fn grid_too_small() {
        assert!(sample_f(Arc::new(Shear), 1.0, 16, 64).is_err());
        assert!(sample_f(Arc::new(Shear), 0.0, 64, 64).is_err());
    }
}
