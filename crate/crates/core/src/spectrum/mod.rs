//! Holonomy of the prequantum connection, the action `A = l - c^{-1} log hol`
//! of closed magnetic geodesics, and the action-spectrum deformation check.

mod action;
mod curves;
mod holonomy;
mod quadrature;

pub use action::{
    action_entry, action_spectrum, isospectral_derivative_check, write_spectrum_csv, ActionEntry, IsospectralReport,
    SPECTRUM_TOL,
};
pub use curves::{check_closed, ClosedCurve, FnCurve, OrbitCurve, Perturbed, Profile, Reparametrized};
pub use holonomy::{
    axis_base_point, circular_distance, holonomy, line_integral_periodic, mod1, ConnectionData, Holonomy,
    HolonomyOptions,
};
pub use quadrature::{composite_gauss, gauss_legendre};
