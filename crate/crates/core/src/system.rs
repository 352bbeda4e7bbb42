//! The magnetic system `(g, Omega = lambda * Omega_a)` with its integrality
//! constant `c` and an optional connection deformation `beta_tau`.
//!
//! Holonomy convention: `log hol(∂Σ) = +c ∫_Σ Omega (mod 1)`. With
//! `alpha_tau = alpha + Π*beta_tau` this gives the deformed form
//! `Omega_tau = Omega + (1 / 2πc) d beta_tau`, i.e.
//! `lambda_tau = lambda + e^{-2u} curl(beta_tau) / (2πc)`.

use crate::error::{Error, Result};
use crate::fourier::{torus_scale, Fourier2, Jet};
use crate::surface::{MetricJet, SurfaceModel, SurfacePoint};

/// A smooth 1-form `w1 dx1 + w2 dx2` on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub w1: Fourier2,
    pub w2: Fourier2,
}

impl OneForm {
    pub fn zero() -> Self {
        Self {
            w1: Fourier2::zero(torus_scale()),
            w2: Fourier2::zero(torus_scale()),
        }
    }

    /// The exact form `dF`.
    pub fn exact(f: &Fourier2) -> Self {
        Self {
            w1: f.derivative(0),
            w2: f.derivative(1),
        }
    }

    /// The closed, non-exact constant form `a dx1 + b dx2`.
    pub fn constant(a: f64, b: f64) -> Self {
        let mut w1 = Fourier2::zero(torus_scale());
        let mut w2 = Fourier2::zero(torus_scale());
        w1.add_constant(a);
        w2.add_constant(b);
        Self { w1, w2 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            w1: self.w1.scaled(s),
            w2: self.w2.scaled(s),
        }
    }

    pub fn sum(&self, o: &Self) -> Self {
        Self {
            w1: self.w1.sum(&o.w1),
            w2: self.w2.sum(&o.w2),
        }
    }

    /// `d(beta) = curl * dx1 ^ dx2` with `curl = d1 w2 - d2 w1`.
    pub fn curl(&self) -> Fourier2 {
        self.w2.derivative(0).sum(&self.w1.derivative(1).scaled(-1.0))
    }

    /// Chart components at a point.
    pub fn at(&self, p: [f64; 2]) -> [f64; 2] {
        [self.w1.value(p), self.w2.value(p)]
    }

    /// Jets of both components.
    pub fn jets(&self, p: [f64; 2]) -> [Jet<2>; 2] {
        [self.w1.jet(p), self.w2.jet(p)]
    }

    pub fn max_degree(&self) -> usize {
        self.w1.max_degree().max(self.w2.max_degree())
    }
}

/// `beta_tau = sum_p tau^p * beta_p`, analytic in `tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaFamily {
    pub terms: Vec<(u32, OneForm)>,
}

impl BetaFamily {
    pub fn linear(beta: OneForm) -> Self {
        Self {
            terms: vec![(1, beta)],
        }
    }

    pub fn at(&self, tau: f64) -> OneForm {
        self.terms
            .iter()
            .fold(OneForm::zero(), |acc, (p, b)| acc.sum(&b.scaled(tau.powi(*p as i32))))
    }

    /// `d beta_tau / d tau`.
    pub fn derivative_at(&self, tau: f64) -> OneForm {
        self.terms.iter().fold(OneForm::zero(), |acc, (p, b)| {
            if *p == 0 {
                acc
            } else {
                acc.sum(&b.scaled(*p as f64 * tau.powi(*p as i32 - 1)))
            }
        })
    }

    /// True when every term is exact (zero curl and zero mean).
    pub fn is_exact(&self) -> bool {
        self.terms
            .iter()
            .all(|(_, b)| {
                b.curl().terms().iter().all(|(_, c)| c.norm() < 1e-12)
                    && b.w1.mean() == 0.0
                    && b.w2.mean() == 0.0
            })
    }
}

/// Value and chart gradient of a function on the surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct MagneticSystem {
    pub surface: SurfaceModel,
    /// Integrality constant, `[c Omega]` integral.
    pub c: f64,
    pub beta: Option<BetaFamily>,
    pub tau: f64,
}

impl MagneticSystem {
    /// Torus system with the default `c`: the smallest positive value making
    /// `c ∫ Omega` an integer (1 when `Omega` is exact).
    pub fn new(surface: SurfaceModel) -> Result<Self> {
        let c = match &surface {
            SurfaceModel::Torus(_) => {
                let flux = total_flux(&surface)?;
                if flux.abs() < 1e-12 {
                    1.0
                } else {
                    1.0 / flux.abs()
                }
            }
            SurfaceModel::Hyperbolic(_) => 1.0,
        };
        Self::with_c(surface, c)
    }

    pub fn with_c(surface: SurfaceModel, c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::Config("integrality constant c must be nonzero".into()));
        }
        if surface.is_torus() {
            let n = c * total_flux(&surface)?;
            if (n - n.round()).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "c * ∫Ω = {n} is not an integer; choose c so that [cΩ] is integral"
                )));
            }
        }
        Ok(Self {
            surface,
            c,
            beta: None,
            tau: 0.0,
        })
    }

    pub fn with_deformation(mut self, beta: BetaFamily) -> Result<Self> {
        if !self.surface.is_torus() {
            return Err(Error::Unsupported("connection deformations need the torus backend".into()));
        }
        self.beta = Some(beta);
        Ok(self)
    }

    /// The same system at another deformation parameter.
    pub fn at_tau(&self, tau: f64) -> Self {
        Self {
            tau,
            ..self.clone()
        }
    }

    pub fn metric(&self, p: SurfacePoint) -> Result<MetricJet> {
        self.surface.eval_metric_data(p)
    }

    /// `lambda_tau` with its chart gradient.
    pub fn eval_lambda_jet(&self, p: SurfacePoint) -> Result<ScalarJet> {
        let base = self.surface.lambda_jet(p)?;
        let mut out = ScalarJet {
            value: base.value,
            grad: base.grad,
        };
        if let Some(beta) = &self.beta {
            let m = self.metric(p)?;
            let curl = beta.at(self.tau).curl().jet(p.as_array());
            let kappa = 1.0 / (std::f64::consts::TAU * self.c);
            let e = 1.0 / m.area_density;
            out.value += kappa * e * curl.value;
            for j in 0..2 {
                out.grad[j] += kappa * e * (curl.grad[j] - 2.0 * curl.value * m.u.grad[j]);
            }
        }
        Ok(out)
    }

    /// Density of `Omega_tau` against `dx1 ^ dx2`.
    pub fn flux_density(&self, p: SurfacePoint) -> Result<f64> {
        let m = self.metric(p)?;
        Ok(self.eval_lambda_jet(p)?.value * m.area_density)
    }

    pub fn hyperbolic_generators(&self) -> Option<Vec<crate::hyperbolic::Mobius>> {
        match &self.surface {
            SurfaceModel::Hyperbolic(h) => Some(h.disk_generators()),
            _ => None,
        }
    }
}

/// `∫_M Omega` on the torus by the periodic trapezoid rule.
pub fn total_flux(surface: &SurfaceModel) -> Result<f64> {
    let SurfaceModel::Torus(spec) = surface else {
        return Err(Error::Unsupported("total flux needs a compact chart".into()));
    };
    let n = 4 * spec.max_degree.max(4) + 32;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = SurfacePoint::new(i as f64 / n as f64, j as f64 / n as f64);
            let m = surface.eval_metric_data(p)?;
            sum += surface.lambda_jet(p)?.value * m.area_density;
        }
    }
    Ok(sum / (n * n) as f64)
}

/// Total area of the torus.
pub fn torus_area(surface: &SurfaceModel) -> Result<f64> {
    let SurfaceModel::Torus(spec) = surface else {
        return Err(Error::Unsupported("area needs a compact chart".into()));
    };
    let n = 4 * spec.max_degree.max(4) + 32;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = SurfacePoint::new(i as f64 / n as f64, j as f64 / n as f64);
            sum += surface.eval_metric_data(p)?.area_density;
        }
    }
    Ok(sum / (n * n) as f64)
}
