use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::flow::{chart_vector, frame_components, integrate_orbit, linearized_flow, magnetic_rhs};
use crate::smbundle::UnitTangent;
use crate::system::MagneticSystem;

use super::deck::{wrap_angle, Deck};
use super::{ClosedOrbit, Stability, TopologicalClass};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingOptions {
    /// Integrator tolerance for orbit and Jacobi solves.
    pub integration_tol: f64,
    /// Newton stops once the closure residual is below this.
    pub target_residual: f64,
    /// Orbits with a final residual above this are rejected.
    pub accept_residual: f64,
    pub max_iterations: usize,
    /// Smallest singular value of the bordered Newton matrix below which the
    /// orbit counts as degenerate.
    pub degeneracy_threshold: f64,
    /// Return degenerate orbits instead of a degenerate-orbit error.
    pub allow_degenerate: bool,
    /// Cap on the Newton step in chart units.
    pub max_step: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            integration_tol: 1e-12,
            target_residual: 1e-11,
            accept_residual: 1e-9,
            max_iterations: 40,
            degeneracy_threshold: 1e-8,
            allow_degenerate: false,
            max_step: 0.2,
        }
    }
}

/// Closure defect `D^{-1} phi_T(z0) - z0` with the angle wrapped, plus the
/// full angle increment for winding bookkeeping.
struct Closure {
    residual: [f64; 3],
    pulled_back: UnitTangent,
    angle_increment: f64,
}

fn closure(sys: &MagneticSystem, deck: &Deck, z0: UnitTangent, period: f64, tol: f64) -> Result<(Closure, crate::flow::OrbitSolution)> {
    let orbit = integrate_orbit(sys, z0, (0.0, period), tol)?;
    let end = orbit.final_state();
    let back = deck.inverse().apply(&end);
    let raw = back.theta - z0.theta;
    let residual = [back.p.x1 - z0.p.x1, back.p.x2 - z0.p.x2, wrap_angle(raw)];
    Ok((
        Closure {
            residual,
            pulled_back: back,
            angle_increment: end.theta - z0.theta,
        },
        orbit,
    ))
}

fn norm(v: &[f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Bordered Newton matrix `[[J - I, X_lambda], [X_lambda(z0)^T, 0]]` where
/// `J = F(pullback) M F(z0)^{-1}` is the chart derivative of
/// `z0 -> D^{-1} phi_T(z0)`; deck maps are isometries preserving `lambda`, so
/// they carry the frame at `phi_T(z0)` to the frame at the pulled-back point.
fn newton_matrix(
    sys: &MagneticSystem,
    z0: &UnitTangent,
    pulled: &UnitTangent,
    frame_map: &[[f64; 3]; 3],
) -> Result<Matrix4<f64>> {
    let mut a = Matrix4::zeros();
    for col in 0..3 {
        let mut e = [0.0; 3];
        e[col] = 1.0;
        let xyw = frame_components(sys, z0, e)?;
        let img: [f64; 3] = std::array::from_fn(|r| (0..3).map(|c| frame_map[r][c] * xyw[c]).sum());
        let v = chart_vector(sys, pulled, img)?;
        for row in 0..3 {
            a[(row, col)] = v[row] - if row == col { 1.0 } else { 0.0 };
        }
    }
    let xt = magnetic_rhs(sys, &pulled.state())?;
    let x0 = magnetic_rhs(sys, &z0.state())?;
    for i in 0..3 {
        a[(i, 3)] = xt[i];
        a[(3, i)] = x0[i];
    }
    Ok(a)
}

fn stability(a: &Matrix4<f64>, frame_map: &[[f64; 3]; 3], threshold: f64) -> Stability {
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let sigma_min = *sv.last().unwrap_or(&0.0);
    Stability {
        singular_values: sv,
        transverse_trace: frame_map[0][0] + frame_map[1][1] + frame_map[2][2] - 1.0,
        nondegenerate: sigma_min > threshold,
    }
}

/// Newton shooting for a closed orbit in `class` from `seed` with period guess
/// `t_seed`. Unknowns `(z0, T)`; the closure condition is imposed in the
/// universal cover after pulling the endpoint back by the deck map, and the
/// phase condition keeps the correction orthogonal to the flow direction.
pub fn shoot_and_refine(
    sys: &MagneticSystem,
    class: &TopologicalClass,
    seed: UnitTangent,
    t_seed: f64,
    opts: &ShootingOptions,
) -> Result<ClosedOrbit> {
    if !(t_seed > 0.0) {
        return Err(Error::Contract(format!("period guess must be positive, got {t_seed}")));
    }
    sys.surface.check_domain(seed.p)?;
    let deck = Deck::for_class(sys, class)?;
    let mut z0 = seed;
    let mut period = t_seed;
    let mut last = f64::INFINITY;
    for iter in 0..opts.max_iterations {
        let (cl, orbit) = closure(sys, &deck, z0, period, opts.integration_tol)?;
        let res = norm(&cl.residual);
        let m = linearized_flow(sys, &orbit)?;
        let a = newton_matrix(sys, &z0, &cl.pulled_back, &m)?;
        let done = res < opts.target_residual || (iter > 2 && res < opts.accept_residual && res > 0.5 * last);
        if done || iter + 1 == opts.max_iterations {
            if res >= opts.accept_residual {
                return Err(Error::NoConvergence {
                    iterations: iter + 1,
                    residual: res,
                });
            }
            let stab = stability(&a, &m, opts.degeneracy_threshold);
            let class = finalize_class(class, cl.angle_increment);
            let sigma_min = *stab.singular_values.last().unwrap_or(&0.0);
            let nondegenerate = stab.nondegenerate;
            let orbit = ClosedOrbit {
                z0,
                period,
                class,
                newton_residual: res,
                stability: Some(stab),
            };
            if !nondegenerate && !opts.allow_degenerate {
                return Err(Error::DegenerateOrbit {
                    sigma_min,
                    residual: res,
                    orbit: Box::new(orbit),
                });
            }
            return Ok(orbit);
        }
        last = res;
        let rhs = Vector4::new(-cl.residual[0], -cl.residual[1], -cl.residual[2], 0.0);
        let svd = a.svd(true, true);
        let cutoff = 1e-12 * svd.singular_values.max();
        let step = svd
            .solve(&rhs, cutoff)
            .map_err(|_| Error::NoConvergence {
                iterations: iter + 1,
                residual: res,
            })?;
        let mut dz = [step[0], step[1], step[2]];
        let mut dt = step[3];
        let size = norm(&dz).max(dt.abs());
        if size > opts.max_step {
            let s = opts.max_step / size;
            dz.iter_mut().for_each(|v| *v *= s);
            dt *= s;
        }
        z0 = UnitTangent::new(z0.p.x1 + dz[0], z0.p.x2 + dz[1], z0.theta + dz[2]);
        period += dt;
        if !(period > 0.0) {
            return Err(Error::NoConvergence {
                iterations: iter + 1,
                residual: res,
            });
        }
        sys.surface.check_domain(z0.p)?;
    }
    unreachable!("loop returns on its last iteration")
}

fn finalize_class(class: &TopologicalClass, angle_increment: f64) -> TopologicalClass {
    match class {
        TopologicalClass::Torus { m, n, .. } => TopologicalClass::Torus {
            m: *m,
            n: *n,
            winding: (angle_increment / std::f64::consts::TAU).round() as i64,
        },
        other => other.clone(),
    }
}

/// Re-integrate an accepted orbit at `tol` and return the closure defect in
/// cover coordinates.
pub fn closure_defect(sys: &MagneticSystem, orbit: &ClosedOrbit, tol: f64) -> Result<f64> {
    let deck = Deck::for_class(sys, &orbit.class)?;
    let (cl, _) = closure(sys, &deck, orbit.z0, orbit.period, tol)?;
    Ok(norm(&cl.residual))
}
