use serde::Serialize;

use crate::error::Result;
use crate::smbundle::UnitTangent;
use crate::surface::SurfaceModel;
use crate::system::MagneticSystem;

use super::{chunked_flow, potentials, RICCATI_BLOWUP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HyperbolicityStatus {
    /// `K_eff < 0` at every grid point: the Riccati cone is preserved.
    #[serde(rename = "certified negative-K")]
    CertifiedNegative,
    #[serde(rename = "indeterminate")]
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperbolicityReport {
    pub k_min: f64,
    pub k_max: f64,
    pub grid_points: usize,
    /// Sampled orbits along which the Riccati solution from `u = 0` stayed
    /// bounded over `[0, T]`.
    pub riccati_bounded: usize,
    pub riccati_samples: usize,
    pub status: HyperbolicityStatus,
}

/// Range of `K_eff = K - H lambda + lambda^2` over a grid of `SM` (plus the given
/// samples), and Riccati boundedness along the sampled orbits. Only the
/// sufficient condition `max K_eff < 0` is ever reported as certified.
pub fn hyperbolicity_diagnostic(sys: &MagneticSystem, samples: &[UnitTangent], t: f64) -> Result<HyperbolicityReport> {
    let mut pts: Vec<UnitTangent> = samples.to_vec();
    let n_theta = 24;
    match &sys.surface {
        SurfaceModel::Torus(spec) => {
            let deg = spec.max_degree.max(sys.beta.as_ref().map_or(0, |b| b.terms.iter().map(|t| t.1.max_degree()).max().unwrap_or(0)));
            let n = 4 * deg + 16;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n_theta {
                        pts.push(UnitTangent::new(
                            i as f64 / n as f64,
                            j as f64 / n as f64,
                            std::f64::consts::TAU * k as f64 / n_theta as f64,
                        ));
                    }
                }
            }
        }
        SurfaceModel::Hyperbolic(_) => {
            // polar grid over the disk of radius 0.9, which contains the
            // fundamental domain of the default octagon
            for i in 0..12 {
                let r = 0.9 * i as f64 / 11.0;
                for j in 0..24 {
                    let a = std::f64::consts::TAU * j as f64 / 24.0;
                    for k in 0..n_theta {
                        pts.push(UnitTangent::new(
                            r * a.cos(),
                            r * a.sin(),
                            std::f64::consts::TAU * k as f64 / n_theta as f64,
                        ));
                    }
                }
            }
        }
    }
    let ks = crate::parallel::try_par_map_range(pts.len(), |i| potentials(sys, &pts[i]).map(|p| p.k_eff))?;
    let k_min = ks.iter().copied().fold(f64::INFINITY, f64::min);
    let k_max = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let bounded = crate::parallel::par_map_range(samples.len(), |i| {
        let z = samples[i];
        chunked_flow(
            sys,
            [z.p.x1, z.p.x2, z.theta, 0.0],
            t,
            1.0,
            1e-9,
            |pot, s, d| {
                if s[3].abs() > RICCATI_BLOWUP {
                    return Err(crate::Error::Contract("riccati blow-up".into()));
                }
                d[3] = -s[3] * s[3] - pot.k_eff;
                Ok(())
            },
            |_, _| Ok(()),
        )
        .is_ok()
    });
    let status = if k_max < 0.0 {
        HyperbolicityStatus::CertifiedNegative
    } else {
        HyperbolicityStatus::Indeterminate
    };
    Ok(HyperbolicityReport {
        k_min,
        k_max,
        grid_points: pts.len(),
        riccati_bounded: bounded.iter().filter(|b| **b).count(),
        riccati_samples: samples.len(),
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{torus_scale, Fourier2};
    use crate::surface::{ConformalTorusSpec, HyperbolicConstantSpec};

    #[test]
    fn constant_field_on_hyperbolic_surface_is_certified() {
        let sys = MagneticSystem::new(SurfaceModel::Hyperbolic(HyperbolicConstantSpec::new(0.5).unwrap())).unwrap();
        let samples = [UnitTangent::new(0.1, 0.2, 0.3), UnitTangent::new(-0.3, 0.0, 2.0)];
        let r = hyperbolicity_diagnostic(&sys, &samples, 20.0).unwrap();
        assert_eq!(r.status, HyperbolicityStatus::CertifiedNegative);
        assert!((r.k_min + 0.75).abs() < 1e-12 && (r.k_max + 0.75).abs() < 1e-12);
        assert_eq!(r.riccati_bounded, 2);
    }

    #[test]
    fn flat_torus_with_constant_field_is_not_certified() {
        let sys = MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::flat(0.3))).unwrap();
        let r = hyperbolicity_diagnostic(&sys, &[UnitTangent::new(0.0, 0.0, 0.0)], 20.0).unwrap();
        assert_eq!(r.status, HyperbolicityStatus::Indeterminate);
        assert!((r.k_max - 0.09).abs() < 1e-12 && (r.k_min - 0.09).abs() < 1e-12);
        // u = -0.3 tan(0.3 t) blows up near t = 5.2
        assert_eq!(r.riccati_bounded, 0);
    }

    #[test]
    fn nonconstant_torus_reports_grid_range() {
        let mut u = Fourier2::zero(torus_scale());
        u.add_cos([0, 1], 0.1);
        let mut l = Fourier2::zero(torus_scale());
        l.add_constant(0.2);
        let sys = MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::new(u, l, 1).unwrap())).unwrap();
        let r = hyperbolicity_diagnostic(&sys, &[], 1.0).unwrap();
        assert!(r.k_min < r.k_max);
        assert_eq!(r.status, HyperbolicityStatus::Indeterminate);
        let area = crate::system::torus_area(&sys.surface).unwrap();
        assert!(area > 0.0);
    }
}
