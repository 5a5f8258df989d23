//! The shear `T(x, y) = (x - y/φ, y)` that straightens the fibres of `α_φ(x, y) = φx - y`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{AnnulusPoint, Jacobian2, LiftPoint};
use crate::map::{AnnulusMap, SharedMap, ToleranceTier};

pub fn t_apply(p: LiftPoint, phi: f64) -> LiftPoint {
    LiftPoint::new(p.x - p.y / phi, p.y)
}

pub fn t_invert(p: LiftPoint, phi: f64) -> LiftPoint {
    LiftPoint::new(p.x + p.y / phi, p.y)
}

/// `g = T ∘ f ∘ T⁻¹`, carrying the push-forward of the invariant density (`det T = 1`).
pub struct TConjugated {
    pub inner: SharedMap,
    pub phi: f64,
    name: String,
}

impl TConjugated {
    pub fn inner(&self) -> &SharedMap {
        &self.inner
    }
}

impl AnnulusMap for TConjugated {
    fn name(&self) -> &str {
        &self.name
    }
    fn lift_eval(&self, p: LiftPoint) -> Result<LiftPoint> {
        Ok(t_apply(self.inner.lift_eval(t_invert(p, self.phi))?, self.phi))
    }
    fn jacobian(&self, p: AnnulusPoint) -> Result<Jacobian2> {
        Ok(self.eval_with_jacobian(p.lift())?.1)
    }
    fn eval_with_jacobian(&self, p: LiftPoint) -> Result<(LiftPoint, Jacobian2)> {
        let k = 1.0 / self.phi;
        let (q, j) = self.inner.eval_with_jacobian(t_invert(p, self.phi))?;
        let dt = Jacobian2::new(1.0, -k, 0.0, 1.0);
        let dt_inv = Jacobian2::new(1.0, k, 0.0, 1.0);
        Ok((t_apply(q, self.phi), dt.mul(&j).mul(&dt_inv)))
    }
    fn invariant_density(&self, p: AnnulusPoint) -> f64 {
        self.inner.invariant_density(t_invert(p.lift(), self.phi).project())
    }
    fn tier(&self) -> ToleranceTier {
        self.inner.tier()
    }
}

pub fn t_conjugate(map: SharedMap, phi: f64) -> Result<SharedMap> {
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::InvalidArgument(format!("phi must be positive, got {phi}")));
    }
    let name = format!("T∘{}∘T⁻¹", map.name());
    Ok(Arc::new(TConjugated { inner: map, phi, name }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::Shear;

    #[test]
    fn shear_commutes_with_t() {
        let g = t_conjugate(Arc::new(Shear), 1.0).unwrap();
        for &(x, y) in &[(0.1, 0.2), (0.6, 0.9), (0.3, 0.5)] {
            let a = g.lift_eval(LiftPoint::new(x, y)).unwrap();
            let b = Shear.lift_eval(LiftPoint::new(x, y)).unwrap();
            assert!((a.x - b.x).abs() < 1e-15 && (a.y - b.y).abs() < 1e-15);
        }
    }
}
