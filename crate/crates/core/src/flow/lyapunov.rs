use crate::error::{Error, Result};
use crate::smbundle::UnitTangent;
use crate::system::MagneticSystem;

use super::chunked_flow;

/// Top Lyapunov exponent estimate from the growth of `(y, ydot)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovEstimate {
    /// `(1/T) log |(y, ydot)(T)|`.
    pub exponent: f64,
    /// Least-squares slope of `log |(y, ydot)|` over the second half of the
    /// run; insensitive to the transient that biases `exponent` by `O(1/T)`.
    pub tail_slope: f64,
    /// `(t, running estimate)` at every renormalization.
    pub convergence: Vec<(f64, f64)>,
}

/// Renormalization interval in time units.
const RENORMALIZE_EVERY: f64 = 1.0;

pub fn lyapunov_exponent(sys: &MagneticSystem, z0: UnitTangent, t_total: f64, tol: f64) -> Result<LyapunovEstimate> {
    if !(t_total > 0.0) {
        return Err(Error::Contract(format!("T must be positive, got {t_total}")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let start = [z0.p.x1, z0.p.x2, z0.theta, s, s];
    let mut log_growth = 0.0;
    let mut curve = Vec::new();
    chunked_flow(
        sys,
        start,
        t_total,
        RENORMALIZE_EVERY,
        tol,
        |pot, st, d| {
            d[3] = st[4];
            d[4] = -pot.k_eff * st[3];
            Ok(())
        },
        |t, st| {
            let n = st[3].hypot(st[4]);
            log_growth += n.ln();
            st[3] /= n;
            st[4] /= n;
            curve.push((t, log_growth));
            Ok(())
        },
    )?;
    let exponent = log_growth / t_total;
    let tail: Vec<_> = curve.iter().filter(|(t, _)| *t >= 0.5 * t_total).copied().collect();
    let tail_slope = slope(&tail).unwrap_or(exponent);
    let convergence = curve.iter().map(|&(t, g)| (t, g / t)).collect();
    Ok(LyapunovEstimate {
        exponent,
        tail_slope,
        convergence,
    })
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mg = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mg)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Some(num / den)
}
