use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel::{ordered_sum, try_par_map_range};
use crate::spectrum::{check_closed, holonomy, mod1, ClosedCurve, HolonomyOptions, Perturbed, Profile};
use crate::surface::SurfacePoint;
use crate::system::MagneticSystem;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreeTimeAction {
    pub k: f64,
    pub period: f64,
    /// `(1/2) int |gamma'|^2 dt`.
    pub kinetic: f64,
    pub holonomy_lift: f64,
    /// `kinetic + k T - log hol / c` before reduction.
    pub value_lift: f64,
    pub value: f64,
}

/// `A_k(gamma) = (1/2) int |gamma'|^2 + k T - c^{-1} log hol(gamma) mod 1`.
pub fn free_time_action(
    sys: &MagneticSystem,
    curve: &dyn ClosedCurve,
    k: f64,
    opts: &HolonomyOptions,
) -> Result<FreeTimeAction> {
    check_closed(sys, curve, 1e-8)?;
    let period = curve.period();
    let n = opts.curve_nodes;
    let h = period / n as f64;
    let rows = try_par_map_range(n, |i| {
        let (p, v) = curve.point(i as f64 * h);
        let m = sys.metric(SurfacePoint::new(p[0], p[1]))?;
        Ok::<f64, Error>(m.area_density * (v[0] * v[0] + v[1] * v[1]))
    })?;
    let kinetic = 0.5 * ordered_sum(&rows) * h;
    let hol = holonomy(sys, curve, opts)?;
    let value_lift = kinetic + k * period - hol.lift / sys.c;
    Ok(FreeTimeAction {
        k,
        period,
        kinetic,
        holonomy_lift: hol.lift,
        value_lift,
        value: mod1(value_lift),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstVariationReport {
    pub delta: f64,
    /// Fourth-order central difference of `tau -> A_k(gamma_tau)` at 0.
    pub derivative: f64,
    /// Second-order difference from the inner points.
    pub derivative_coarse: f64,
    /// Second difference `(A(d) - 2A(0) + A(-d)) / d^2`, which is finite and
    /// typically nonzero: the derivative is checked, not the whole functional.
    pub second_derivative: f64,
    /// `A_k` real lifts at `tau = -2d, -d, 0, d, 2d`.
    pub values: [f64; 5],
}

/// Differentiate the free-time action along the variation `gamma_tau` that
/// pushes `base` by `tau * profile` and stretches its period by
/// `1 + tau * stretch`.
pub fn first_variation_check(
    sys: &MagneticSystem,
    base: &dyn ClosedCurve,
    profile: &Profile,
    stretch: f64,
    k: f64,
    delta: f64,
    opts: &HolonomyOptions,
) -> Result<FirstVariationReport> {
    if !(delta > 0.0) {
        return Err(Error::Contract(format!("variation step must be positive, got {delta}")));
    }
    let mut values = [0.0; 5];
    for (i, slot) in values.iter_mut().enumerate() {
        let tau = (i as f64 - 2.0) * delta;
        let curve = Perturbed::new(sys, base, profile.clone(), tau, stretch);
        *slot = free_time_action(sys, &curve, k, opts)?.value_lift;
    }
    let [am2, am1, a0, ap1, ap2] = values;
    Ok(FirstVariationReport {
        delta,
        derivative: (am2 - 8.0 * am1 + 8.0 * ap1 - ap2) / (12.0 * delta),
        derivative_coarse: (ap1 - am1) / (2.0 * delta),
        second_derivative: (ap1 - 2.0 * a0 + am1) / (delta * delta),
        values,
    })
}
