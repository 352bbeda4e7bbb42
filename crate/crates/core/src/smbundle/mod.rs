//! The unit sphere bundle `SM` in coordinates `(x1, x2, theta)`, where `theta`
//! is the angle of `v` against the orthonormal leg `e^{-u} ∂_1`.

mod frame;
mod functions;
mod quadrature;

pub use frame::{
    apply_field, apply_field_jet, compose_fields, dual_pairings, frame_at, magnetic_commutators_check,
    riemannian_commutators_check, CommutatorResiduals, CorruptedFrame, FieldCoeffs, FieldJet,
    FieldKind, FrameCoefficients, FrameProvider,
};
pub use functions::{BasicFunction, DiskPolynomial, OneFormFunction, SmFunction, TrigFunction};
pub use quadrature::LiouvilleQuadrature;

use serde::{Deserialize, Serialize};

use crate::surface::SurfacePoint;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitTangent {
    pub p: SurfacePoint,
    pub theta: f64,
}

impl UnitTangent {
    pub fn new(x1: f64, x2: f64, theta: f64) -> Self {
        Self {
            p: SurfacePoint::new(x1, x2),
            theta,
        }
    }

    pub fn from_state(s: [f64; 3]) -> Self {
        Self::new(s[0], s[1], s[2])
    }

    pub fn state(&self) -> [f64; 3] {
        [self.p.x1, self.p.x2, self.theta]
    }

    /// Angle reduced to `[0, 2π)`.
    pub fn reduced_theta(&self) -> f64 {
        self.theta.rem_euclid(std::f64::consts::TAU)
    }
}
