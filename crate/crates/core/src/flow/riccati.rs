use std::cell::Cell;

use crate::error::{Error, Result};
use crate::integrator::{integrate, Options, Solution};

use super::{central_derivatives, potentials, OrbitSolution};
use crate::system::MagneticSystem;

/// `|u|` beyond which a Riccati solution is declared blown up (a conjugate
/// point of the underlying Jacobi field).
pub const RICCATI_BLOWUP: f64 = 1e8;

/// Solution of `udot = -u^2 - K_eff` along an orbit.
#[derive(Clone, Debug)]
pub struct RiccatiState {
    pub u0: f64,
    /// Dense output up to the blow-up time or the end of the span.
    pub sol: Solution<1>,
    /// Time at which `|u|` crossed [`RICCATI_BLOWUP`], if it did.
    pub blow_up: Option<f64>,
}

impl RiccatiState {
    pub fn final_value(&self) -> f64 {
        self.sol.final_state()[0]
    }

    pub fn is_bounded(&self) -> bool {
        self.blow_up.is_none()
    }

    /// Sup of `|udot + u^2 + K_eff|` over interior sample times.
    pub fn max_residual(&self, sys: &MagneticSystem, orbit: &OrbitSolution, samples: usize) -> Result<f64> {
        let (a, b) = (self.sol.t_start(), self.sol.t_end());
        let (a, b) = (a.min(b), a.max(b));
        if b - a <= 0.0 {
            return Ok(0.0);
        }
        let h = 1e-3_f64.min((b - a) / 8.0);
        let mut r = 0.0_f64;
        for i in 0..=samples {
            let t = a + 2.0 * h + (b - a - 4.0 * h) * i as f64 / samples as f64;
            let u = self.sol.eval(t)[0];
            let k = potentials(sys, &orbit.state_at(t))?.k_eff;
            let (du, _) = central_derivatives(|q| self.sol.eval(q)[0], t, h);
            r = r.max((du + u * u + k).abs());
        }
        Ok(r)
    }
}

pub fn riccati_advance(
    sys: &MagneticSystem,
    orbit: &OrbitSolution,
    u0: f64,
    t_span: (f64, f64),
) -> Result<RiccatiState> {
    if !u0.is_finite() {
        return Err(Error::Contract(format!("Riccati initial value must be finite, got {u0}")));
    }
    let opts = Options::with_tol(orbit.tol.max(1e-14));
    let blown = Cell::new(None);
    let rhs = |t: f64, s: &[f64; 1]| {
        if s[0].abs() > RICCATI_BLOWUP {
            if blown.get().is_none() {
                blown.set(Some(t));
            }
            return Err(Error::Contract("riccati blow-up".into()));
        }
        let k = potentials(sys, &orbit.state_at(t))?.k_eff;
        Ok([-s[0] * s[0] - k])
    };
    match integrate(rhs, t_span.0, [u0], t_span.1, &opts) {
        Ok(sol) => Ok(RiccatiState { u0, sol, blow_up: None }),
        Err(e) => match blown.get() {
            Some(t_blow) => {
                // re-integrate to just before the crossing so the stored
                // solution stays finite
                let stop = t_span.0 + (t_blow - t_span.0) * (1.0 - 1e-9);
                let opts = Options::with_tol(orbit.tol.max(1e-14));
                let guard = |t: f64, s: &[f64; 1]| {
                    let k = potentials(sys, &orbit.state_at(t))?.k_eff;
                    Ok([-s[0] * s[0] - k])
                };
                let sol = integrate(guard, t_span.0, [u0], stop, &opts)
                    .or_else(|_| integrate(|_, _| Ok([0.0]), t_span.0, [u0], t_span.0, &opts))?;
                Ok(RiccatiState {
                    u0,
                    sol,
                    blow_up: Some(t_blow),
                })
            }
            None => Err(e),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::integrate_orbit;
    use crate::smbundle::UnitTangent;
    use crate::surface::{ConformalTorusSpec, HyperbolicConstantSpec, SurfaceModel};

    fn hyper(l: f64) -> MagneticSystem {
        MagneticSystem::new(SurfaceModel::Hyperbolic(HyperbolicConstantSpec::new(l).unwrap())).unwrap()
    }

    #[test]
    fn fixed_points_in_constant_curvature() {
        for (lam, fp) in [(0.0, 1.0), (0.5, 0.75_f64.sqrt())] {
            let sys = hyper(lam);
            let orbit = integrate_orbit(&sys, UnitTangent::new(0.0, 0.1, 0.0), (0.0, 5.0), 1e-12).unwrap();
            let r = riccati_advance(&sys, &orbit, fp, (0.0, 5.0)).unwrap();
            assert!(r.is_bounded());
            for i in 0..=10 {
                assert!((r.sol.eval(0.5 * i as f64)[0] - fp).abs() < 1e-8);
            }
            assert!(r.max_residual(&sys, &orbit, 100).unwrap() < 1e-7);
        }
    }

    #[test]
    fn flat_riccati_decays_like_reciprocal() {
        let sys = MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::flat(0.0))).unwrap();
        let orbit = integrate_orbit(&sys, UnitTangent::new(0.0, 0.0, 0.3), (0.0, 8.0), 1e-12).unwrap();
        let r = riccati_advance(&sys, &orbit, 1.0, (0.0, 8.0)).unwrap();
        for i in 0..=16 {
            let t = 0.5 * i as f64;
            assert!((r.sol.eval(t)[0] - 1.0 / (1.0 + t)).abs() < 1e-10);
        }
    }

    #[test]
    fn blow_up_is_flagged() {
        // u(t) = -1/(1 - t) from u0 = -1 on the flat torus
        let sys = MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::flat(0.0))).unwrap();
        let orbit = integrate_orbit(&sys, UnitTangent::new(0.0, 0.0, 0.3), (0.0, 3.0), 1e-12).unwrap();
        let r = riccati_advance(&sys, &orbit, -1.0, (0.0, 3.0)).unwrap();
        let t = r.blow_up.expect("blow-up expected");
        assert!((t - 1.0).abs() < 1e-6, "{t}");
        assert!(r.final_value().is_finite());
    }

    #[test]
    fn positive_potential_forces_conjugate_points() {
        // K_eff = lambda^2 on the flat torus: u = -lambda tan(lambda t) from 0
        let sys = MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::flat(0.5))).unwrap();
        let orbit = integrate_orbit(&sys, UnitTangent::new(0.0, 0.0, 0.0), (0.0, 8.0), 1e-12).unwrap();
        let r = riccati_advance(&sys, &orbit, 0.0, (0.0, 8.0)).unwrap();
        let t = r.blow_up.unwrap();
        assert!((t - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn nonfinite_start_rejected() {
        let sys = hyper(0.0);
        let orbit = integrate_orbit(&sys, UnitTangent::new(0.0, 0.0, 0.0), (0.0, 1.0), 1e-10).unwrap();
        assert!(riccati_advance(&sys, &orbit, f64::NAN, (0.0, 1.0)).is_err());
    }
}
