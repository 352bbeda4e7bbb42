//! Time integration of the magnetic flow and of its linearization.

mod diagnostic;
mod jacobi;
mod lyapunov;
mod orbit;
mod riccati;

pub use diagnostic::{hyperbolicity_diagnostic, HyperbolicityReport, HyperbolicityStatus};
pub use jacobi::{
    integrate_jacobi, jacobi_vs_flow_differencing, jacobi_step_sweep, linearized_flow, FlowDifferenceReport,
    JacobiInitial, JacobiSolution, StepSweep, chart_vector, frame_components, integrate_jacobi_span,
};
pub use lyapunov::{lyapunov_exponent, LyapunovEstimate};
pub use orbit::{geodesic_curvature, integrate_orbit, magnetic_rhs, read_dense, OrbitSolution};
pub use riccati::{riccati_advance, RiccatiState, RICCATI_BLOWUP};

use crate::error::Result;
use crate::smbundle::{frame_at, UnitTangent};
use crate::system::MagneticSystem;

/// `lambda`, `K_eff = K - H lambda + lambda^2` and `X lambda` at a point of `SM`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Potentials {
    pub lambda: f64,
    pub k_eff: f64,
    pub x_lambda: f64,
}

pub fn potentials(sys: &MagneticSystem, z: &UnitTangent) -> Result<Potentials> {
    let f = frame_at(sys, z)?;
    let x_lambda = f.x.a[0] * f.lambda.grad[0] + f.x.a[1] * f.lambda.grad[1];
    Ok(Potentials {
        lambda: f.lambda.value,
        k_eff: f.effective_curvature(),
        x_lambda,
    })
}

/// Fourth-order central first and second derivatives of a scalar function.
pub(crate) fn central_derivatives(f: impl Fn(f64) -> f64, t: f64, h: f64) -> (f64, f64) {
    let (fm2, fm1, f0, fp1, fp2) = (f(t - 2.0 * h), f(t - h), f(t), f(t + h), f(t + 2.0 * h));
    let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    (d1, d2)
}

/// Integrate the flow jointly with `N - 3` scalar quantities riding on it, in
/// chunks of `chunk` time units. Between chunks the base point is brought back
/// to the fundamental domain on the hyperbolic backend (the extra quantities
/// are frame-intrinsic and unchanged by deck maps) and `on_chunk` may rescale
/// them.
pub(crate) fn chunked_flow<const N: usize>(
    sys: &MagneticSystem,
    mut state: [f64; N],
    t_total: f64,
    chunk: f64,
    tol: f64,
    extra: impl Fn(&Potentials, &[f64; N], &mut [f64; N]) -> Result<()>,
    mut on_chunk: impl FnMut(f64, &mut [f64; N]) -> Result<()>,
) -> Result<[f64; N]> {
    use crate::integrator::{integrate, Options};
    let opts = Options::with_tol(tol);
    let gens = sys.hyperbolic_generators();
    let mut t = 0.0;
    while t < t_total {
        let t1 = (t + chunk).min(t_total);
        let sol = integrate(
            |_, s: &[f64; N]| {
                let z = UnitTangent::new(s[0], s[1], s[2]);
                let f = frame_at(sys, &z)?;
                let pot = Potentials {
                    lambda: f.lambda.value,
                    k_eff: f.effective_curvature(),
                    x_lambda: f.x.a[0] * f.lambda.grad[0] + f.x.a[1] * f.lambda.grad[1],
                };
                let mut d = [0.0; N];
                d[..3].copy_from_slice(&f.xl.a);
                extra(&pot, s, &mut d)?;
                Ok(d)
            },
            t,
            state,
            t1,
            &opts,
        )?;
        state = sol.final_state();
        if let Some(g) = &gens {
            let w = num_complex::Complex64::new(state[0], state[1]);
            let (w, th, _) = crate::hyperbolic::reduce_to_fundamental_domain(g, w, state[2]);
            state[0] = w.re;
            state[1] = w.im;
            state[2] = th;
        } else {
            state[0] = state[0].rem_euclid(1.0);
            state[1] = state[1].rem_euclid(1.0);
        }
        t = t1;
        on_chunk(t, &mut state)?;
    }
    Ok(state)
}
