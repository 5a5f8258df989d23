//! Points and linear maps on the annulus `ℝ/ℤ × [0,1]`, its universal cover and the plane.

use serde::{Deserialize, Serialize};

/// A point of the annulus. `x` is the periodic coordinate, `y` the radial one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPoint {
    pub x: f64,
    pub y: f64,
}

impl AnnulusPoint {
    /// Builds a point, reducing `x` into `[0, 1)`.
    pub fn new(x: f64, y: f64) -> Self {
        Self { x: wrap01(x), y }
    }

    pub fn lift(self) -> LiftPoint {
        LiftPoint { x: self.x, y: self.y }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }

    /// Euclidean distance on the cylinder (x measured the short way round).
    pub fn distance(&self, other: &AnnulusPoint) -> f64 {
        let dx = wrap_signed(self.x - other.x);
        dx.hypot(self.y - other.y)
    }
}

/// A point of the universal cover `ℝ × [0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftPoint {
    pub x: f64,
    pub y: f64,
}

impl LiftPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn project(self) -> AnnulusPoint {
        AnnulusPoint::new(self.x, self.y)
    }

    pub fn shifted(self, dx: f64) -> Self {
        Self { x: self.x + dx, y: self.y }
    }
}

/// Phase-plane point of the pendulum (angle kept unwrapped).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &PlanePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// 2×2 real matrix `[[a, b], [c, d]]`, used for Jacobians and monodromy matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2 {
    /// ∂f₁/∂x
    pub a: f64,
    /// ∂f₁/∂y
    pub b: f64,
    /// ∂f₂/∂x
    pub c: f64,
    /// ∂f₂/∂y
    pub d: f64,
}

impl Jacobian2 {
    pub const IDENTITY: Jacobian2 = Jacobian2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Jacobian2) -> Jacobian2 {
        Jacobian2 {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn minus_identity(&self) -> Jacobian2 {
        Jacobian2 { a: self.a - 1.0, d: self.d - 1.0, ..*self }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Solves `self · z = rhs`; `None` when the determinant is below `min_det` in magnitude.
    pub fn solve(&self, rhs: [f64; 2], min_det: f64) -> Option<[f64; 2]> {
        let det = self.det();
        if det.abs() < min_det || !det.is_finite() {
            return None;
        }
        Some([
            (self.d * rhs[0] - self.b * rhs[1]) / det,
            (-self.c * rhs[0] + self.a * rhs[1]) / det,
        ])
    }

    pub fn max_abs_diff(&self, other: &Jacobian2) -> f64 {
        [
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
        ]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Reduces a real number into `[0, 1)`.
pub fn wrap01(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can return exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of `x mod 1` in `[-1/2, 1/2)`.
pub fn wrap_signed(x: f64) -> f64 {
    wrap01(x + 0.5) - 0.5
}

/// Representative of an angle in `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = (theta + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}
