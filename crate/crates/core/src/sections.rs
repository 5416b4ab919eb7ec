//! Central hyperplane sections `K ∩ ξ⊥` as `(n-1)`-dimensional bodies in
//! frame coordinates.

use nalgebra::DVector;

use crate::bodies::{BodyModel, EllipsoidRep, PolytopeH};
use crate::error::{Error, Result};
use crate::geom::{orthonormal_frame, Direction, SectionFrame, ORTHO_TOL};

/// Projected constraint rows shorter than this are parallel to the section
/// and dropped.
pub const ZERO_ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SectionBody {
    pub frame: SectionFrame,
    pub body: BodyModel,
}

impl SectionBody {
    /// Frame coordinates of an ambient direction lying in the section plane.
    pub fn frame_coords(&self, theta: &Direction) -> Result<DVector<f64>> {
        let dot = theta.dot(self.frame.normal());
        if dot.abs() > ORTHO_TOL {
            return Err(Error::NotOrthogonal { dot });
        }
        Ok(self.frame.to_frame(theta.as_vector()))
    }
}

/// `K ∩ ξ⊥` in the canonical frame of `ξ`.
pub fn section(k: &BodyModel, xi: &Direction) -> Result<SectionBody> {
    if xi.dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), found: xi.dim() });
    }
    section_with_frame(k, orthonormal_frame(xi))
}

/// `K ∩ ξ⊥` in a caller-supplied frame of `ξ⊥`.
pub fn section_with_frame(k: &BodyModel, frame: SectionFrame) -> Result<SectionBody> {
    let n = k.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall { min: 3, found: n });
    }
    if frame.ambient_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: frame.ambient_dim() });
    }
    let b = frame.basis();
    let body = match k {
        BodyModel::Ellipsoid(e) => {
            BodyModel::Ellipsoid(EllipsoidRep::new(b.transpose() * e.q() * b)?)
        }
        BodyModel::PolytopeH(p) => {
            let rows: Vec<DVector<f64>> = p
                .rows()
                .iter()
                .map(|a| b.tr_mul(a))
                .filter(|r| r.norm() > ZERO_ROW_TOL)
                .collect();
            BodyModel::PolytopeH(PolytopeH::new(rows)?)
        }
        other => other.section_gauge(frame.clone()),
    };
    Ok(SectionBody { frame, body })
}

/// `ρ_{K∩ξ⊥}(θ)` for `θ ⊥ ξ`, which is just `ρ_K(θ)`.
pub fn section_radial(k: &BodyModel, xi: &Direction, theta: &Direction) -> Result<f64> {
    let dot = theta.dot(xi);
    if dot.abs() > ORTHO_TOL {
        return Err(Error::NotOrthogonal { dot });
    }
    Ok(k.radial(theta))
}
