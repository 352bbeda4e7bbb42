//! Surface backends: a conformal torus `g = e^{2u}(dx1^2 + dx2^2)` with Fourier
//! data, and the constant-curvature hyperbolic plane in the Poincaré disk chart
//! (`e^u = 2 / (1 - |x|^2)`). Both metrics are conformal, so rotation by π/2 is
//! the Euclidean rotation of chart components (counterclockwise).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{torus_scale, Fourier2, Jet};
use crate::hyperbolic::{octagon_real_generators, Mobius, RealMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x1: f64,
    pub x2: f64,
}

impl SurfacePoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    /// Representative in the fundamental square `[0, 1)^2`.
    pub fn reduced_mod1(&self) -> Self {
        Self::new(self.x1.rem_euclid(1.0), self.x2.rem_euclid(1.0))
    }
}

/// Chart components of a tangent vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub v1: f64,
    pub v2: f64,
}

impl TangentVector {
    pub fn new(v1: f64, v2: f64) -> Self {
        Self { v1, v2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConformalTorusSpec {
    /// Conformal exponent `u`.
    pub u: Fourier2,
    /// Magnetic intensity `lambda` with `Omega = lambda * Omega_a`.
    pub lambda: Fourier2,
    pub max_degree: usize,
}

impl ConformalTorusSpec {
    pub fn new(u: Fourier2, lambda: Fourier2, max_degree: usize) -> Result<Self> {
        let deg = u.max_degree().max(lambda.max_degree());
        if deg > max_degree {
            return Err(Error::Config(format!(
                "Fourier data has degree {deg} above declared max_degree {max_degree}"
            )));
        }
        Ok(Self {
            u,
            lambda,
            max_degree,
        })
    }

    pub fn flat(lambda0: f64) -> Self {
        let mut lambda = Fourier2::zero(torus_scale());
        if lambda0 != 0.0 {
            lambda.add_constant(lambda0);
        }
        Self {
            u: Fourier2::zero(torus_scale()),
            lambda,
            max_degree: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicConstantSpec {
    pub curvature: f64,
    pub lambda_const: f64,
    pub deck_generators: Vec<RealMatrix>,
}

impl HyperbolicConstantSpec {
    /// `K = -1`, constant `lambda`, default octagon generators.
    pub fn new(lambda_const: f64) -> Result<Self> {
        Self::with_generators(lambda_const, octagon_real_generators())
    }

    pub fn with_generators(lambda_const: f64, deck_generators: Vec<RealMatrix>) -> Result<Self> {
        if lambda_const.abs() >= 1.0 || !lambda_const.is_finite() {
            return Err(Error::Regime(lambda_const));
        }
        for (i, g) in deck_generators.iter().enumerate() {
            if (g.det() - 1.0).abs() > 1e-10 {
                return Err(Error::Config(format!("deck generator {i} has det {}", g.det())));
            }
            if !g.is_hyperbolic() {
                return Err(Error::Config(format!(
                    "deck generator {i} is not hyperbolic (|trace| = {})",
                    g.trace().abs()
                )));
            }
        }
        Ok(Self {
            curvature: -1.0,
            lambda_const,
            deck_generators,
        })
    }

    pub fn disk_generators(&self) -> Vec<Mobius> {
        self.deck_generators.iter().map(|g| g.to_disk()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceModel {
    Torus(ConformalTorusSpec),
    Hyperbolic(HyperbolicConstantSpec),
}

/// Conformal exponent with derivatives, curvature and area density at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricJet {
    pub u: Jet<2>,
    /// `e^{-u}`, the chart length of a unit vector.
    pub inv_conformal: f64,
    /// `e^{2u}`, the area density.
    pub area_density: f64,
    pub curvature: f64,
}

impl MetricJet {
    /// `g(a, b)` for chart vectors.
    pub fn inner(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        self.area_density * (a[0] * b[0] + a[1] * b[1])
    }
}

impl SurfaceModel {
    pub fn is_torus(&self) -> bool {
        matches!(self, SurfaceModel::Torus(_))
    }

    pub fn check_domain(&self, p: SurfacePoint) -> Result<()> {
        let finite = p.x1.is_finite() && p.x2.is_finite();
        match self {
            SurfaceModel::Torus(_) if finite => Ok(()),
            SurfaceModel::Hyperbolic(_) if finite && p.x1 * p.x1 + p.x2 * p.x2 < 1.0 => Ok(()),
            _ => Err(Error::Domain(p.x1, p.x2)),
        }
    }

    /// Metric data: `u` through second order, `K = -e^{-2u}(u_11 + u_22)` on the
    /// torus and `K = -1` on the disk.
    pub fn eval_metric_data(&self, p: SurfacePoint) -> Result<MetricJet> {
        self.check_domain(p)?;
        let u = match self {
            SurfaceModel::Torus(spec) => spec.u.jet(p.as_array()),
            SurfaceModel::Hyperbolic(_) => disk_conformal_jet(p),
        };
        let inv_conformal = (-u.value).exp();
        let area_density = (2.0 * u.value).exp();
        let curvature = match self {
            SurfaceModel::Torus(_) => -(u.hess[0][0] + u.hess[1][1]) / area_density,
            SurfaceModel::Hyperbolic(h) => h.curvature,
        };
        Ok(MetricJet {
            u,
            inv_conformal,
            area_density,
            curvature,
        })
    }

    /// Undeformed magnetic intensity with its chart derivatives.
    pub fn lambda_jet(&self, p: SurfacePoint) -> Result<Jet<2>> {
        self.check_domain(p)?;
        Ok(match self {
            SurfaceModel::Torus(spec) => spec.lambda.jet(p.as_array()),
            SurfaceModel::Hyperbolic(h) => Jet::constant(h.lambda_const),
        })
    }

    /// Rotation by π/2 (counterclockwise in the chart).
    pub fn rotate_tangent(&self, p: SurfacePoint, v: TangentVector) -> Result<TangentVector> {
        self.check_domain(p)?;
        rotate(v)
    }
}

pub fn rotate(v: TangentVector) -> Result<TangentVector> {
    if v.v1 == 0.0 && v.v2 == 0.0 {
        return Err(Error::DegenerateInput("rotation of the zero vector".into()));
    }
    Ok(TangentVector::new(-v.v2, v.v1))
}

/// `u = ln 2 - ln(1 - r^2)` with exact derivatives.
fn disk_conformal_jet(p: SurfacePoint) -> Jet<2> {
    let x = p.as_array();
    let s = 1.0 - x[0] * x[0] - x[1] * x[1];
    let mut jet = Jet::<2> {
        value: (2.0 / s).ln(),
        ..Default::default()
    };
    for j in 0..2 {
        jet.grad[j] = 2.0 * x[j] / s;
        for k in 0..2 {
            let delta = if j == k { 1.0 } else { 0.0 };
            jet.hess[j][k] = 2.0 * delta / s + 4.0 * x[j] * x[k] / (s * s);
        }
    }
    jet
}
