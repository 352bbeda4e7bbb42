use crate::error::{Error, Result};
use crate::integrator::{integrate, Options, Solution};
use crate::smbundle::{frame_at, UnitTangent};
use crate::system::MagneticSystem;

use super::{central_derivatives, integrate_orbit, potentials, OrbitSolution};

/// Scalar initial data `(x0, y0, ydot0)` of a magnetic Jacobi field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobiInitial {
    pub x: f64,
    pub y: f64,
    pub ydot: f64,
}

impl JacobiInitial {
    pub fn new(x: f64, y: f64, ydot: f64) -> Self {
        Self { x, y, ydot }
    }

    /// Initial data of `J_xi` for a chart tangent vector `xi = (dx1, dx2, dtheta)` at `z`.
    pub fn from_chart_vector(sys: &MagneticSystem, z: &UnitTangent, xi: [f64; 3]) -> Result<Self> {
        let [x, y, w] = frame_components(sys, z, xi)?;
        let lambda = sys.eval_lambda_jet(z.p)?.value;
        Ok(Self { x, y, ydot: w - lambda * x })
    }
}

/// Components `(x, y, w)` of a chart vector in the frame `X, H, V`.
pub fn frame_components(sys: &MagneticSystem, z: &UnitTangent, xi: [f64; 3]) -> Result<[f64; 3]> {
    let m = sys.metric(z.p)?;
    let (s, c) = z.theta.sin_cos();
    let eu = 1.0 / m.inv_conformal;
    let u = m.u.grad;
    Ok([
        eu * (c * xi[0] + s * xi[1]),
        eu * (-s * xi[0] + c * xi[1]),
        -u[1] * xi[0] + u[0] * xi[1] + xi[2],
    ])
}

/// Chart vector `x X + y H + w V`.
pub fn chart_vector(sys: &MagneticSystem, z: &UnitTangent, xyw: [f64; 3]) -> Result<[f64; 3]> {
    let f = frame_at(sys, z)?;
    Ok(std::array::from_fn(|i| xyw[0] * f.x.a[i] + xyw[1] * f.h.a[i] + xyw[2] * f.v.a[i]))
}

/// Solution of `xdot = lambda y`, `ydd + K_eff y = 0` along a stored orbit.
/// State components are `(x, y, ydot)`.
#[derive(Clone, Debug)]
pub struct JacobiSolution {
    pub initial: JacobiInitial,
    pub sol: Solution<3>,
}

impl JacobiSolution {
    pub fn at(&self, t: f64) -> [f64; 3] {
        self.sol.eval(t)
    }

    /// Sup over interior sample times of `|xdot - lambda y|` and
    /// `|ydd + K_eff y|`, divided by `max(1, sup |(x, y, ydot)|)`. Derivatives
    /// are fourth-order differences of the dense output; `ydd` is the
    /// derivative of the `ydot` component, and the consistency `|d y/dt - ydot|`
    /// is folded into the second residual.
    pub fn residuals(&self, sys: &MagneticSystem, orbit: &OrbitSolution, samples: usize) -> Result<[f64; 2]> {
        let (a, b) = (self.sol.t_start().min(self.sol.t_end()), self.sol.t_start().max(self.sol.t_end()));
        let h = 1e-3_f64.min((b - a) / 8.0);
        let (lo, hi) = (a + 2.0 * h, b - 2.0 * h);
        let mut r = [0.0_f64; 2];
        let mut scale = 1.0_f64;
        for i in 0..=samples {
            let t = lo + (hi - lo) * i as f64 / samples as f64;
            let s = self.sol.eval(t);
            let pot = potentials(sys, &orbit.state_at(t))?;
            let (dx, _) = central_derivatives(|q| self.sol.eval(q)[0], t, h);
            let (dy, _) = central_derivatives(|q| self.sol.eval(q)[1], t, h);
            let (ddy, _) = central_derivatives(|q| self.sol.eval(q)[2], t, h);
            r[0] = r[0].max((dx - pot.lambda * s[1]).abs());
            r[1] = r[1].max((ddy + pot.k_eff * s[1]).abs()).max((dy - s[2]).abs());
            scale = scale.max(s.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
        }
        Ok([r[0] / scale, r[1] / scale])
    }
}

fn jacobi_tol(orbit: &OrbitSolution) -> Options {
    Options::with_tol(orbit.tol.max(1e-14))
}

fn check_span(orbit: &OrbitSolution, t_span: (f64, f64)) -> Result<()> {
    let (a, b) = (orbit.t_start().min(orbit.t_end()), orbit.t_start().max(orbit.t_end()));
    let eps = 1e-12 * (1.0 + b.abs());
    let inside = |t: f64| t >= a - eps && t <= b + eps;
    if !inside(t_span.0) || !inside(t_span.1) {
        return Err(Error::Contract(format!(
            "Jacobi span {t_span:?} exceeds orbit dense output [{a}, {b}]"
        )));
    }
    Ok(())
}

pub fn integrate_jacobi(sys: &MagneticSystem, orbit: &OrbitSolution, ic: JacobiInitial) -> Result<JacobiSolution> {
    let span = (orbit.t_start(), orbit.t_end());
    integrate_jacobi_span(sys, orbit, ic, span)
}

pub fn integrate_jacobi_span(
    sys: &MagneticSystem,
    orbit: &OrbitSolution,
    ic: JacobiInitial,
    t_span: (f64, f64),
) -> Result<JacobiSolution> {
    check_span(orbit, t_span)?;
    let sol = integrate(
        |t, s: &[f64; 3]| {
            let p = potentials(sys, &orbit.state_at(t))?;
            Ok([p.lambda * s[1], s[2], -p.k_eff * s[1]])
        },
        t_span.0,
        [ic.x, ic.y, ic.ydot],
        t_span.1,
        &jacobi_tol(orbit),
    )?;
    Ok(JacobiSolution { initial: ic, sol })
}

/// Linearized flow along the whole orbit in frame coordinates: the matrix `M`
/// with `(x, y, w)(T) = M (x, y, w)(0)`, where `w = ydot + lambda x` is the
/// `V`-component.
pub fn linearized_flow(sys: &MagneticSystem, orbit: &OrbitSolution) -> Result<[[f64; 3]; 3]> {
    // Columns integrated jointly in (x, y, w) form:
    // xdot = lambda y, ydot = w - lambda x, wdot = x X_lambda(lambda) + y (lambda^2 - K_eff).
    let mut y0 = [0.0; 9];
    for k in 0..3 {
        y0[3 * k + k] = 1.0;
    }
    let sol = integrate(
        |t, s: &[f64; 9]| {
            let p = potentials(sys, &orbit.state_at(t))?;
            let mut d = [0.0; 9];
            for k in 0..3 {
                let (x, y, w) = (s[3 * k], s[3 * k + 1], s[3 * k + 2]);
                d[3 * k] = p.lambda * y;
                d[3 * k + 1] = w - p.lambda * x;
                d[3 * k + 2] = x * p.x_lambda + y * (p.lambda * p.lambda - p.k_eff);
            }
            Ok(d)
        },
        orbit.t_start(),
        y0,
        orbit.t_end(),
        &jacobi_tol(orbit),
    )?;
    let f = sol.final_state();
    Ok(std::array::from_fn(|r| std::array::from_fn(|c| f[3 * c + r])))
}

/// Comparison of the Jacobi ODE against central differences of neighbouring
/// orbits at a single time and step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowDifferenceReport {
    pub h: f64,
    pub t: f64,
    /// `(x, y)` from the Jacobi system.
    pub jacobi: [f64; 2],
    /// `(x, y)` from differencing the flow.
    pub differenced: [f64; 2],
    pub abs_error: f64,
    pub rel_error: f64,
}

pub fn jacobi_vs_flow_differencing(
    sys: &MagneticSystem,
    z0: UnitTangent,
    xi: [f64; 3],
    t: f64,
    h: f64,
    tol: f64,
) -> Result<FlowDifferenceReport> {
    let orbit = integrate_orbit(sys, z0, (0.0, t), tol)?;
    let ic = JacobiInitial::from_chart_vector(sys, &z0, xi)?;
    let jac = integrate_jacobi(sys, &orbit, ic)?;
    let end = jac.sol.final_state();
    let s0 = z0.state();
    let shifted = |sign: f64| -> Result<[f64; 3]> {
        let z = UnitTangent::from_state(std::array::from_fn(|i| s0[i] + sign * h * xi[i]));
        Ok(integrate_orbit(sys, z, (0.0, t), tol)?.final_state().state())
    };
    let (plus, minus) = (shifted(1.0)?, shifted(-1.0)?);
    let dphi: [f64; 3] = std::array::from_fn(|i| (plus[i] - minus[i]) / (2.0 * h));
    let [x, y, _] = frame_components(sys, &orbit.final_state(), dphi)?;
    let err = ((x - end[0]).powi(2) + (y - end[1]).powi(2)).sqrt();
    let size = (end[0] * end[0] + end[1] * end[1]).sqrt();
    Ok(FlowDifferenceReport {
        h,
        t,
        jacobi: [end[0], end[1]],
        differenced: [x, y],
        abs_error: err,
        rel_error: err / size.max(1e-300),
    })
}

/// Step-size sweep of [`jacobi_vs_flow_differencing`] with observed orders
/// between consecutive steps.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSweep {
    pub reports: Vec<FlowDifferenceReport>,
    pub observed_orders: Vec<f64>,
    pub floor: f64,
}

impl StepSweep {
    /// Largest observed order among consecutive pairs whose errors sit above
    /// `floor_factor` times the final floor, i.e. the pre-roundoff regime.
    pub fn leading_order(&self, floor_factor: f64) -> Option<f64> {
        let cut = self.floor * floor_factor;
        self.reports
            .windows(2)
            .zip(&self.observed_orders)
            .filter(|(w, _)| w[1].rel_error > cut)
            .map(|(_, o)| *o)
            .reduce(f64::max)
    }
}

pub fn jacobi_step_sweep(
    sys: &MagneticSystem,
    z0: UnitTangent,
    xi: [f64; 3],
    t: f64,
    steps: &[f64],
    tol: f64,
) -> Result<StepSweep> {
    let reports: Vec<_> = crate::parallel::try_par_map_range(steps.len(), |i| {
        jacobi_vs_flow_differencing(sys, z0, xi, t, steps[i], tol)
    })?;
    let observed_orders = reports
        .windows(2)
        .map(|w| (w[0].rel_error / w[1].rel_error).ln() / (w[0].h / w[1].h).ln())
        .collect();
    let floor = reports.iter().map(|r| r.rel_error).fold(f64::INFINITY, f64::min);
    Ok(StepSweep {
        reports,
        observed_orders,
        floor,
    })
}
