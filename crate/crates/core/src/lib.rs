//! Numerical toolkit for annulus twist maps: hypothesis checks, the forced-pendulum period map,
//! extraction of the zero set of `φΔ₁ - Δ₂`, the critical-point path machine and fixed-point
//! certification.

pub mod error;
pub mod fixed;
pub mod geometry;
pub mod io;
pub mod map;
pub mod ode;
pub mod path;
pub mod periodic;
pub mod zero_set;

pub use error::{Error, Result};
pub use geometry::{AnnulusPoint, Jacobian2, LiftPoint, PlanePoint};
