use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Passes when `|residual| < tolerance`.
    Upper,
    /// Passes when `|residual| > tolerance` (negative controls).
    Lower,
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub identity: String,
    pub residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl IdentityRecord {
    pub fn new(identity: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            identity: identity.into(),
            residual,
            tolerance,
            bound: Bound::Upper,
            // NaN never passes
            pass: residual.abs() < tolerance,
        }
    }

    /// A negative control: the quantity must be clearly nonzero.
    pub fn exceeds(identity: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            identity: identity.into(),
            residual: value,
            tolerance: threshold,
            bound: Bound::Lower,
            pass: value.abs() > threshold,
        }
    }
}
