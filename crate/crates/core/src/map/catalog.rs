use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{check_finite, AnnulusMap, SharedMap, ToleranceTier};
use crate::error::{Error, Result};
use crate::geometry::{AnnulusPoint, Jacobian2, LiftPoint};
use crate::ode;

/// `f(x, y) = (x + y - 1/2, y)`: the model twist map, fixing the circle `y = 1/2` pointwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct Shear;

impl AnnulusMap for Shear {
    fn name(&self) -> &str {
        "shear"
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        Ok(LiftPoint::new(p.x + p.y - 0.5, p.y))
    }
    fn jacobian(&self, _p: AnnulusPoint) -> Result<Jacobian2> {
        Ok(Jacobian2::new(1.0, 1.0, 0.0, 1.0))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl AnnulusMap for Identity {
    fn name(&self) -> &str {
        "identity"
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        Ok(p)
    }
    fn jacobian(&self, _p: AnnulusPoint) -> Result<Jacobian2> {
        Ok(Jacobian2::IDENTITY)
    }
}

/// Time-one map of `H(x, y) = y²/2 - y/2 + ε cos(2πx) y(1-y)`.
///
/// Both boundary circles are invariant; `(0, 1/2)` is a saddle and `(1/2, 1/2)` a centre of
/// the flow, hence fixed points of the map.
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianTwist {
    pub epsilon: f64,
    pub tol: f64,
}

impl HamiltonianTwist {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..0.4).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 0.4), got {epsilon}")));
        }
        Ok(Self { epsilon, tol: 1e-11 })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Hamiltonian vector field `(∂H/∂y, -∂H/∂x)`.
    pub fn field(&self, x: f64, y: f64) -> [f64; 2] {
        let (s, c) = (TAU * x).sin_cos();
        let e = self.epsilon;
        [y - 0.5 + e * c * (1.0 - 2.0 * y), TAU * e * s * y * (1.0 - y)]
    }

    pub fn field_jacobian(&self, x: f64, y: f64) -> Jacobian2 {
        let (s, c) = (TAU * x).sin_cos();
        let e = self.epsilon;
        Jacobian2::new(
            -TAU * e * s * (1.0 - 2.0 * y),
            1.0 - 2.0 * e * c,
            4.0 * PI * PI * e * c * y * (1.0 - y),
            TAU * e * s * (1.0 - 2.0 * y),
        )
    }
}

impl AnnulusMap for HamiltonianTwist {
    fn name(&self) -> &str {
        "hamiltonian_twist"
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        // integrate from the fundamental domain so that lifts commute with deck translations
        let k = p.x.floor();
        let q = ode::autonomous_flow(|x, y| self.field(x, y), [p.x - k, p.y], 1.0, self.tol)?;
        check_finite(LiftPoint::new(q[0] + k, q[1]))
    }
    fn jacobian(&self, p: AnnulusPoint) -> Result<Jacobian2> {
        Ok(self.eval_with_jacobian(p.lift())?.1)
    }
    fn eval_with_jacobian(&self, p: LiftPoint) -> Result<(LiftPoint, Jacobian2)> {
        let k = p.x.floor();
        let (q, j) = ode::autonomous_flow_with_jacobian(
            |x, y| (self.field(x, y), self.field_jacobian(x, y)),
            [p.x - k, p.y],
            1.0,
            self.tol,
        )?;
        Ok((check_finite(LiftPoint::new(q[0] + k, q[1]))?, j))
    }
    fn tier(&self) -> ToleranceTier {
        ToleranceTier::Integrated
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityChoice {
    /// Push-forward of Lebesgue measure under the conjugating chart (invariant).
    Pushforward,
    /// Plain Lebesgue measure (not invariant for `c != 0`).
    Lebesgue,
}

/// `ψ ∘ shear ∘ ψ⁻¹` with `ψ(x, y) = (x, y + c sin(2πx) y(1-y))`.
#[derive(Debug, Clone, Copy)]
pub struct ConjugatedShear {
    pub c: f64,
    pub density: DensityChoice,
}

impl ConjugatedShear {
    pub fn new(c: f64, density: DensityChoice) -> Result<Self> {
        if !(c.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("|c| must be < 1, got {c}")));
        }
        Ok(Self { c, density })
    }

    pub fn psi(&self, x: f64, y: f64) -> (f64, f64) {
        (x, y + self.c * (TAU * x).sin() * y * (1.0 - y))
    }

    /// Inverse of `ψ` on a fibre: the root in `[0,1]` of `cs·y'² - (1+cs)·y' + y = 0`.
    pub fn psi_inv(&self, x: f64, y: f64) -> (f64, f64) {
        let cs = self.c * (TAU * x).sin();
        let b = 1.0 + cs;
        let disc = (b * b - 4.0 * cs * y).max(0.0);
        (x, 2.0 * y / (b + disc.sqrt()))
    }

    pub fn psi_jacobian(&self, x: f64, y: f64) -> Jacobian2 {
        let (s, co) = (TAU * x).sin_cos();
        Jacobian2::new(
            1.0,
            0.0,
            TAU * self.c * co * y * (1.0 - y),
            1.0 + self.c * s * (1.0 - 2.0 * y),
        )
    }
}

impl AnnulusMap for ConjugatedShear {
    fn name(&self) -> &str {
        "conjugated_shear"
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        let (x0, y0) = self.psi_inv(p.x, p.y);
        let (x1, y1) = (x0 + y0 - 0.5, y0);
        let (x2, y2) = self.psi(x1, y1);
        check_finite(LiftPoint::new(x2, y2))
    }
    fn jacobian(&self, p: AnnulusPoint) -> Result<Jacobian2> {
        let (x0, y0) = self.psi_inv(p.x, p.y);
        let dpsi_at_pre = self.psi_jacobian(x0, y0);
        let d = dpsi_at_pre.det();
        let dpsi_inv = Jacobian2::new(dpsi_at_pre.d / d, -dpsi_at_pre.b / d, -dpsi_at_pre.c / d, dpsi_at_pre.a / d);
        let shear = Jacobian2::new(1.0, 1.0, 0.0, 1.0);
        let dpsi_at_img = self.psi_jacobian(x0 + y0 - 0.5, y0);
        Ok(dpsi_at_img.mul(&shear).mul(&dpsi_inv))
    }
    fn invariant_density(&self, p: AnnulusPoint) -> f64 {
        match self.density {
            DensityChoice::Lebesgue => 1.0,
            DensityChoice::Pushforward => {
                let (x0, y0) = self.psi_inv(p.x, p.y);
                1.0 / self.psi_jacobian(x0, y0).det()
            }
        }
    }
}

/// `f(x, y) = (x + y - 1/2, y + β y(1-y) σ(x))` with the positive bump `σ(x) = exp(cos 2πx - 1)`.
///
/// A twist map that pushes every interior point upward, so it preserves no positive density.
#[derive(Debug, Clone, Copy)]
pub struct BumpDrift {
    pub beta: f64,
}

impl BumpDrift {
    pub fn sigma(x: f64) -> f64 {
        ((TAU * x).cos() - 1.0).exp()
    }

    pub fn sigma_prime(x: f64) -> f64 {
        -TAU * (TAU * x).sin() * Self::sigma(x)
    }
}

impl AnnulusMap for BumpDrift {
    fn name(&self) -> &str {
        "bump_drift"
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        Ok(LiftPoint::new(
            p.x + p.y - 0.5,
            p.y + self.beta * p.y * (1.0 - p.y) * Self::sigma(p.x),
        ))
    }
    fn jacobian(&self, p: AnnulusPoint) -> Result<Jacobian2> {
        let s = Self::sigma(p.x);
        Ok(Jacobian2::new(
            1.0,
            1.0,
            self.beta * p.y * (1.0 - p.y) * Self::sigma_prime(p.x),
            1.0 + self.beta * (1.0 - 2.0 * p.y) * s,
        ))
    }
}

/// `f(x, y) = (x + κ G(x, y), y + δ y(1-y))` with
/// `G(x, y) = (y - 1/2) - b sin(2π(x - c(y - 1/2)))`.
///
/// For `(c - 1/φ)·b > 1/2π` the invariant curve folds back on itself, giving vertical
/// tangents; every interior point moves up, so all components are monotone.
#[derive(Debug, Clone, Copy)]
pub struct FoldedDrift {
    pub kappa: f64,
    pub delta: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for FoldedDrift {
    fn default() -> Self {
        Self { kappa: 0.1, delta: 0.01, b: 0.12, c: 4.0 }
    }
}

impl FoldedDrift {
    fn g(&self, x: f64, y: f64) -> f64 {
        (y - 0.5) - self.b * (TAU * (x - self.c * (y - 0.5))).sin()
    }
}

impl AnnulusMap for FoldedDrift {
    fn name(&self) -> &str {
        "folded_drift"
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        Ok(LiftPoint::new(
            p.x + self.kappa * self.g(p.x, p.y),
            p.y + self.delta * p.y * (1.0 - p.y),
        ))
    }
    fn jacobian(&self, p: AnnulusPoint) -> Result<Jacobian2> {
        let ph = TAU * (p.x - self.c * (p.y - 0.5));
        let gx = -self.b * TAU * ph.cos();
        let gy = 1.0 + self.b * TAU * self.c * ph.cos();
        Ok(Jacobian2::new(
            1.0 + self.kappa * gx,
            self.kappa * gy,
            0.0,
            1.0 + self.delta * (1.0 - 2.0 * p.y),
        ))
    }
}

/// Map specification: a catalog name plus parameters, e.g.
/// `{"name":"hamiltonian_twist","epsilon":0.1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub name: String,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl MapSpec {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), params: Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("bad map spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("map spec serialises")
    }

    pub(crate) fn allow(&self, keys: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidArgument(format!("unknown parameter `{k}` for map `{}`", self.name))),
            None => Ok(()),
        }
    }

    pub(crate) fn num(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::InvalidArgument(format!("parameter `{key}` must be a number"))),
        }
    }

    pub(crate) fn pair(&self, key: &str, default: [f64; 2]) -> Result<[f64; 2]> {
        match self.params.get(key) {
            None => Ok(default),
            Some(Value::Array(a)) if a.len() == 2 => {
                let x = a[0].as_f64();
                let y = a[1].as_f64();
                match (x, y) {
                    (Some(x), Some(y)) => Ok([x, y]),
                    _ => Err(Error::InvalidArgument(format!("parameter `{key}` must be [x, y]"))),
                }
            }
            Some(_) => Err(Error::InvalidArgument(format!("parameter `{key}` must be [x, y]"))),
        }
    }

    pub fn build(&self) -> Result<SharedMap> {
        match self.name.as_str() {
            "shear" => {
                self.allow(&[])?;
                Ok(Arc::new(Shear))
            }
            "identity" => {
                self.allow(&[])?;
                Ok(Arc::new(Identity))
            }
            "hamiltonian_twist" => {
                self.allow(&["epsilon", "tol"])?;
                let m = HamiltonianTwist::new(self.num("epsilon", 0.1)?)?;
                Ok(Arc::new(m.with_tol(self.num("tol", 1e-11)?)))
            }
            "conjugated_shear" => {
                self.allow(&["c", "density"])?;
                let density = match self.params.get("density").and_then(Value::as_str) {
                    None | Some("pushforward") => DensityChoice::Pushforward,
                    Some("lebesgue") => DensityChoice::Lebesgue,
                    Some(other) => {
                        return Err(Error::InvalidArgument(format!("unknown density `{other}`")));
                    }
                };
                Ok(Arc::new(ConjugatedShear::new(self.num("c", 0.2)?, density)?))
            }
            "bump_drift" => {
                self.allow(&["beta"])?;
                Ok(Arc::new(BumpDrift { beta: self.num("beta", 0.1)? }))
            }
            "folded_drift" => {
                self.allow(&["kappa", "delta", "b", "c"])?;
                let d = FoldedDrift::default();
                Ok(Arc::new(FoldedDrift {
                    kappa: self.num("kappa", d.kappa)?,
                    delta: self.num("delta", d.delta)?,
                    b: self.num("b", d.b)?,
                    c: self.num("c", d.c)?,
                }))
            }
            "pendulum_annulus" => {
                self.allow(&["a", "n", "inner", "outer", "m", "iterations", "tol"])?;
                crate::periodic::pendulum_annulus_from_spec(self)
            }
            other => Err(Error::UnknownMap(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// Whether the default parameters give a twist map with an invariant density.
    pub satisfies_hypotheses: bool,
    pub spec: MapSpec,
}

impl CatalogEntry {
    /// Constructs the map; the pendulum entry integrates its chart only at this point.
    pub fn build(&self) -> Result<SharedMap> {
        self.spec.build()
    }
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "shear",
            description: "linear shear (x + y - 1/2, y)",
            satisfies_hypotheses: true,
            spec: MapSpec::new("shear"),
        },
        CatalogEntry {
            name: "hamiltonian_twist",
            description: "time-one map of y²/2 - y/2 + ε cos(2πx) y(1-y)",
            satisfies_hypotheses: true,
            spec: MapSpec::new("hamiltonian_twist").with("epsilon", 0.1),
        },
        CatalogEntry {
            name: "conjugated_shear",
            description: "shear conjugated by (x, y + c sin(2πx) y(1-y))",
            satisfies_hypotheses: true,
            spec: MapSpec::new("conjugated_shear").with("c", 0.2),
        },
        CatalogEntry {
            name: "pendulum_annulus",
            description: "sixth iterate of the forced-pendulum period map between two invariant curves",
            satisfies_hypotheses: true,
            spec: MapSpec::new("pendulum_annulus"),
        },
        CatalogEntry {
            name: "identity",
            description: "identity (no twist)",
            satisfies_hypotheses: false,
            spec: MapSpec::new("identity"),
        },
        CatalogEntry {
            name: "bump_drift",
            description: "shear with an upward drift; no invariant density",
            satisfies_hypotheses: false,
            spec: MapSpec::new("bump_drift").with("beta", 0.1),
        },
        CatalogEntry {
            name: "folded_drift",
            description: "twist with folded invariant curves and an upward drift; no invariant density",
            satisfies_hypotheses: false,
            spec: MapSpec::new("folded_drift"),
        },
    ]
}
