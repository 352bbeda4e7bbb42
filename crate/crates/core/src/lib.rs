//! Numerical laboratory for magnetic flows on closed oriented surfaces.
//!
//! The crate builds the frame calculus of the unit sphere bundle `SM` for a
//! magnetic system `(g, Omega = lambda * Omega_a)`, integrates the flow with its
//! Jacobi and Riccati equations, finds closed magnetic geodesics, and evaluates
//! the integral identities, index forms and action functionals attached to them.

pub mod error;
pub mod flow;
pub mod fourier;
pub mod hyperbolic;
pub mod io;
pub mod integrator;
pub mod orbits;
pub mod parallel;
pub mod smbundle;
pub mod spectrum;
pub mod surface;
pub mod system;
pub mod variational;

pub use error::{Error, Result};
