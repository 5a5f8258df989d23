//! Python bindings. Structured results come back as plain dicts and lists.

use ::annulus_twist::fixed::{find_all_fixed_points, AuditContext, FixedPointScan};
use ::annulus_twist::map::{catalog, check_hypotheses, MapSpec, SharedMap};
use ::annulus_twist::ode::{iterate_orbit, period_map_n, PendulumParams};
use ::annulus_twist::path::{all_critical_points, default_eps_window, find_closed_loop, measure_verdict};
use ::annulus_twist::periodic::{band_seeds, find_center, newton_cycle, rotation_number, search_cycles};
use ::annulus_twist::zero_set::{extract_conjugated, extract_regular};
use ::annulus_twist::{AnnulusPoint, Error, LiftPoint, PlanePoint};
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde_json::{json, Value};

pyo3::create_exception!(annulus_twist, AnnulusError, PyException);

const RETRIES: usize = 4;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(m) => PyValueError::new_err(m),
        Error::UnknownMap(m) => PyValueError::new_err(format!("unknown map `{m}`")),
        other => AnnulusError::new_err(other.to_string()),
    }
}

/// Converts through the `json` module so results are ordinary Python objects.
fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn spec_text(spec: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = spec.extract::<String>() {
        return Ok(s);
    }
    if spec.is_instance_of::<PyDict>() {
        let py = spec.py();
        return py.import("json")?.call_method1("dumps", (spec,))?.extract();
    }
    Err(PyValueError::new_err("map spec must be a JSON string or a dict"))
}

/// A catalog map, built from a spec such as `{"name": "hamiltonian_twist", "epsilon": 0.1}`.
#[pyclass(name = "AnnulusMap", frozen)]
struct PyAnnulusMap {
    spec: MapSpec,
    map: SharedMap,
}

#[pymethods]
impl PyAnnulusMap {
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        let spec = MapSpec::from_json(&spec_text(spec)?).map_err(err)?;
        let map = spec.build().map_err(err)?;
        Ok(Self { spec, map })
    }

    #[getter]
    fn name(&self) -> String {
        self.spec.name.clone()
    }

    #[getter]
    fn tier(&self) -> String {
        serde_json::to_value(self.map.tier()).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    }

    /// Image of `(x, y)` with `x` reduced into `[0, 1)`.
    fn eval(&self, x: f64, y: f64) -> PyResult<(f64, f64)> {
        let p = self.map.eval(AnnulusPoint::new(x, y)).map_err(err)?;
        Ok((p.x, p.y))
    }

    /// Image under the lift, without reduction.
    fn lift_eval(&self, x: f64, y: f64) -> PyResult<(f64, f64)> {
        let p = self.map.lift_eval(LiftPoint::new(x, y)).map_err(err)?;
        Ok((p.x, p.y))
    }

    fn jacobian(&self, x: f64, y: f64) -> PyResult<[[f64; 2]; 2]> {
        let j = self.map.jacobian(AnnulusPoint::new(x, y)).map_err(err)?;
        Ok([[j.a, j.b], [j.c, j.d]])
    }

    fn density(&self, x: f64, y: f64) -> f64 {
        self.map.invariant_density(AnnulusPoint::new(x, y))
    }

    #[pyo3(signature = (twist_samples = 256, measure_samples = 1024))]
    fn check<'py>(&self, py: Python<'py>, twist_samples: usize, measure_samples: usize) -> PyResult<Bound<'py, PyAny>> {
        let r = check_hypotheses(self.map.as_ref(), twist_samples, measure_samples).map_err(err)?;
        let mut v = serde_json::to_value(&r).map_err(|e| PyValueError::new_err(e.to_string()))?;
        v["ok"] = json!(r.ok());
        to_py(py, &v)
    }

    /// Components of the zero set of `φΔ₁ - Δ₂`, vertices included.
    #[pyo3(signature = (phi = 1.3, nx = 256, ny = 128))]
    fn invariant_curves<'py>(&self, py: Python<'py>, phi: f64, nx: usize, ny: usize) -> PyResult<Bound<'py, PyAny>> {
        let set = extract_regular(self.map.clone(), phi, nx, ny, RETRIES).map_err(err)?;
        let mut v = set.summary_json();
        v["components"] = set
            .components
            .iter()
            .map(|c| {
                json!({
                    "id": c.id,
                    "closed": c.closed,
                    "winding": c.winding,
                    "u": c.u.label(),
                    "vertices": c.vertices.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
                })
            })
            .collect();
        to_py(py, &v)
    }

    /// Fixed points on the zero set. Raises `AnnulusError` when none can be certified.
    #[pyo3(signature = (phi = 1.3, nx = 256, ny = 128))]
    fn fixed_points<'py>(&self, py: Python<'py>, phi: f64, nx: usize, ny: usize) -> PyResult<Bound<'py, PyAny>> {
        let scan = self.scan(phi, nx, ny)?;
        to_py(py, &scan.to_json())
    }

    /// The path machine's closed loop and its measure verdict (T-coordinates).
    #[pyo3(signature = (phi = 1.3, nx = 256, ny = 128))]
    fn closed_loop<'py>(&self, py: Python<'py>, phi: f64, nx: usize, ny: usize) -> PyResult<Bound<'py, PyAny>> {
        let (set, g) = extract_conjugated(self.map.clone(), phi, nx, ny, RETRIES).map_err(err)?;
        let cps = all_critical_points(&set, default_eps_window(&set), Some(g.as_ref())).map_err(err)?;
        let path = find_closed_loop(&set, &cps).map_err(err)?;
        let verdict = measure_verdict(&path, g.as_ref(), &|p| g.invariant_density(p)).map_err(err)?;
        let v = json!({
            "phi": set.phi,
            "winding": path.winding,
            "segments": path.segments_json(),
            "component_sequence": path.component_sequence(),
            "polyline": path.polyline().iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
            "verdict": serde_json::to_value(verdict).map_err(|e| PyValueError::new_err(e.to_string()))?,
        });
        to_py(py, &v)
    }

    /// Ball-excision audit about the fixed point with the given record index (default: first
    /// negative-index point), halving `epsilon` until the verdict holds.
    #[pyo3(signature = (phi = 1.3, nx = 256, ny = 128, epsilon = 0.05, halvings = 6, record = None))]
    #[allow(clippy::too_many_arguments)]
    fn audit<'py>(
        &self,
        py: Python<'py>,
        phi: f64,
        nx: usize,
        ny: usize,
        epsilon: f64,
        halvings: usize,
        record: Option<usize>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let scan = self.scan(phi, nx, ny)?;
        let center = match record {
            Some(i) => scan.records.get(i).copied(),
            None => scan.records.iter().find(|r| r.index < 0).or(scan.records.first()).copied(),
        }
        .ok_or_else(|| PyValueError::new_err("no such fixed point"))?;
        let ctx = AuditContext::new(self.map.clone(), phi, (nx, ny), 256).map_err(err)?;
        let audits = ctx.audit_halving(&center, epsilon, halvings).map_err(err)?;
        to_py(py, &Value::Array(audits.iter().map(|a| a.to_json()).collect()))
    }

    fn __repr__(&self) -> String {
        format!("AnnulusMap({})", self.spec.to_json())
    }
}

impl PyAnnulusMap {
    fn scan(&self, phi: f64, nx: usize, ny: usize) -> PyResult<FixedPointScan> {
        find_all_fixed_points(self.map.clone(), phi, (nx, ny)).map_err(err)
    }
}

fn params(a: f64) -> PyResult<PendulumParams> {
    PendulumParams::new(a).map_err(err)
}

/// Names of the catalog maps.
#[pyfunction]
fn catalog_names() -> Vec<&'static str> {
    catalog().iter().map(|e| e.name).collect()
}

/// `n`-fold period map of `x'' + sin x = a cos t`: returns `(x, y, monodromy)`.
#[pyfunction]
#[pyo3(signature = (x, y, a = 0.0, n = 1, tol = 1e-10))]
fn period_map(x: f64, y: f64, a: f64, n: usize, tol: f64) -> PyResult<(f64, f64, [[f64; 2]; 2])> {
    let r = period_map_n(PlanePoint::new(x, y), n, params(a)?, tol).map_err(err)?;
    let m = r.monodromy;
    Ok((r.endpoint.x, r.endpoint.y, [[m.a, m.b], [m.c, m.d]]))
}

/// Seed followed by `n` period-map iterates.
#[pyfunction]
#[pyo3(signature = (x, y, n, a = 0.0, tol = 1e-10))]
fn orbit(x: f64, y: f64, n: usize, a: f64, tol: f64) -> PyResult<Vec<(f64, f64)>> {
    let o = iterate_orbit(PlanePoint::new(x, y), n, params(a)?, tol).map_err(err)?;
    Ok(std::iter::once(o.seed).chain(o.iterates).map(|p| (p.x, p.y)).collect())
}

/// The fixed point of the period map near the origin.
#[pyfunction]
#[pyo3(signature = (a, tol = 1e-11))]
fn center(a: f64, tol: f64) -> PyResult<(f64, f64)> {
    let c = find_center(params(a)?, tol).map_err(err)?.points[0];
    Ok((c.x, c.y))
}

/// Newton from one seed for an `n`-cycle.
#[pyfunction]
#[pyo3(signature = (x, y, n, a, tol = 1e-10))]
fn cycle<'py>(py: Python<'py>, x: f64, y: f64, n: usize, a: f64, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let c = newton_cycle(PlanePoint::new(x, y), n, params(a)?, tol).map_err(err)?;
    to_py(py, &c.to_json())
}

/// Distinct `n`-cycles from a polar grid of seeds in the band `r0 ≤ r ≤ r1` about the centre.
#[pyfunction]
#[pyo3(signature = (n, a, r0, r1, n_angles = 40, n_radii = 10, tol = 1e-10))]
#[allow(clippy::too_many_arguments)]
fn find_cycles<'py>(
    py: Python<'py>,
    n: usize,
    a: f64,
    r0: f64,
    r1: f64,
    n_angles: usize,
    n_radii: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let p = params(a)?;
    let c = find_center(p, tol.min(1e-11)).map_err(err)?.points[0];
    let cycles = search_cycles(&band_seeds(c, r0, r1, n_angles, n_radii), n, p, tol);
    to_py(py, &Value::Array(cycles.iter().map(|c| c.to_json()).collect()))
}

/// Rotation number of the orbit of `(x, y)` about the centre: `(value, uncertainty)`.
#[pyfunction]
#[pyo3(signature = (x, y, a, n = 600, tol = 1e-10))]
fn rotation(x: f64, y: f64, a: f64, n: usize, tol: f64) -> PyResult<(f64, f64)> {
    let p = params(a)?;
    let c = find_center(p, tol.min(1e-11)).map_err(err)?.points[0];
    let r = rotation_number(PlanePoint::new(x, y), c, n, p, tol).map_err(err)?;
    Ok((r.value, r.uncertainty))
}

#[pymodule]
#[pyo3(name = "annulus_twist")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAnnulusMap>()?;
    m.add("AnnulusError", m.py().get_type::<AnnulusError>())?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    m.add_function(wrap_pyfunction!(period_map, m)?)?;
    m.add_function(wrap_pyfunction!(orbit, m)?)?;
    m.add_function(wrap_pyfunction!(center, m)?)?;
    m.add_function(wrap_pyfunction!(cycle, m)?)?;
    m.add_function(wrap_pyfunction!(find_cycles, m)?)?;
    m.add_function(wrap_pyfunction!(rotation, m)?)?;
    Ok(())
}
