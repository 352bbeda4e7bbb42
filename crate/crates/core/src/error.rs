use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({0}, {1}) is outside the chart domain")]
    Domain(f64, f64),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("quadrature bandwidth too small: {nodes} nodes on an axis, need at least {required}")]
    Bandwidth { nodes: usize, required: usize },
    #[error("step size underflow at t = {t} (h = {h})")]
    Stiffness { t: f64, h: f64 },
    #[error("newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("closed orbit is degenerate (smallest singular value {sigma_min:e}, residual {residual:e})")]
    DegenerateOrbit {
        sigma_min: f64,
        residual: f64,
        orbit: Box<crate::orbits::ClosedOrbit>,
    },
    #[error("magnetic intensity {0} outside the regime |lambda| < 1")]
    Regime(f64),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("continuation halted at tau = {tau}: {reason}")]
    ContinuationHalted { tau: f64, reason: String },
    #[error("missing data: {0}")]
    Data(String),
    #[error("unsupported on this backend: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
