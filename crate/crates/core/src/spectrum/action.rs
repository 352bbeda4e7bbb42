use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::orbits::{ClosedOrbit, ContinuationPoint};
use crate::system::MagneticSystem;

use super::curves::{ClosedCurve, OrbitCurve};
use super::holonomy::{holonomy, line_integral_periodic, mod1, HolonomyOptions};

/// One closed orbit's contribution to the action spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActionEntry {
    pub class: String,
    pub tau: f64,
    pub length: f64,
    /// Real lift of `log hol`.
    pub holonomy_lift: f64,
    /// `log hol mod 1`.
    pub holonomy: f64,
    /// Real lift `length - log hol / c`.
    pub action_lift: f64,
    /// `action_lift mod 1`.
    pub action: f64,
    pub fill_discrepancy: f64,
}

/// Orbit re-integration tolerance used for spectra.
pub const SPECTRUM_TOL: f64 = 1e-12;

pub fn action_entry(sys: &MagneticSystem, orbit: &ClosedOrbit, opts: &HolonomyOptions) -> Result<ActionEntry> {
    let curve = OrbitCurve::new(sys, orbit, SPECTRUM_TOL)?;
    let hol = holonomy(sys, &curve, opts)?;
    let length = orbit.length();
    let action_lift = length - hol.lift / sys.c;
    Ok(ActionEntry {
        class: orbit.class.key(),
        tau: sys.tau,
        length,
        holonomy_lift: hol.lift,
        holonomy: hol.reduced,
        action_lift,
        action: mod1(action_lift),
        fill_discrepancy: hol.fill_discrepancy,
    })
}

/// Action values of a set of orbits, sorted by value on the circle and then
/// by class key.
pub fn action_spectrum(sys: &MagneticSystem, orbits: &[ClosedOrbit], opts: &HolonomyOptions) -> Result<Vec<ActionEntry>> {
    let mut out = crate::parallel::try_par_map_range(orbits.len(), |i| action_entry(sys, &orbits[i], opts))?;
    out.sort_by(|a, b| a.action.total_cmp(&b.action).then_with(|| a.class.cmp(&b.class)));
    Ok(out)
}

/// CSV with header `class,tau,length,holonomy,action`; the class key is quoted
/// since it contains commas.
pub fn write_spectrum_csv<W: Write>(mut w: W, entries: &[ActionEntry]) -> Result<()> {
    writeln!(w, "class,tau,length,holonomy,action")?;
    for e in entries {
        writeln!(w, "\"{}\",{:.12},{:.15},{:.15},{:.15}", e.class, e.tau, e.length, e.holonomy, e.action)?;
    }
    Ok(())
}

/// Lemma-level relation along a continued orbit family:
/// `d a_tau / d tau + (1 / 2 pi c) int_{gamma_tau} d beta_tau / d tau = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsospectralReport {
    pub tau: f64,
    /// Fourth-order central difference of the action lift.
    pub action_derivative: f64,
    /// Second-order estimate from the inner stencil points, for a convergence check.
    pub action_derivative_coarse: f64,
    /// `int_{gamma_tau} d beta / d tau`.
    pub line_integral: f64,
    pub residual: f64,
}

/// Checks the relation at `tau0` from a continuation path containing
/// `tau0 + k h` for `k = -2..=2`.
pub fn isospectral_derivative_check(
    sys: &MagneticSystem,
    path: &[ContinuationPoint],
    tau0: f64,
    h: f64,
    opts: &HolonomyOptions,
) -> Result<IsospectralReport> {
    let beta = sys
        .beta
        .as_ref()
        .ok_or_else(|| Error::Data("system has no deformation family".into()))?;
    let find = |tau: f64| {
        path.iter()
            .find(|p| (p.tau - tau).abs() < 1e-12 * (1.0 + tau.abs()))
            .ok_or_else(|| Error::Data(format!("continuation has no orbit at tau = {tau}")))
    };
    let mut a = [0.0; 5];
    for (k, slot) in a.iter_mut().enumerate() {
        let tau = tau0 + (k as f64 - 2.0) * h;
        let p = find(tau)?;
        *slot = action_entry(&sys.at_tau(tau), &p.orbit, opts)?.action_lift;
    }
    let d4 = (a[0] - 8.0 * a[1] + 8.0 * a[3] - a[4]) / (12.0 * h);
    let d2 = (a[3] - a[1]) / (2.0 * h);
    let centre = find(tau0)?;
    let here = sys.at_tau(tau0);
    let curve = OrbitCurve::new(&here, &centre.orbit, SPECTRUM_TOL)?;
    let line = line_integral_periodic(&beta.derivative_at(tau0), &curve as &dyn ClosedCurve, opts.curve_nodes);
    let residual = d4 + line / (std::f64::consts::TAU * sys.c);
    Ok(IsospectralReport {
        tau: tau0,
        action_derivative: d4,
        action_derivative_coarse: d2,
        line_integral: line,
        residual,
    })
}
