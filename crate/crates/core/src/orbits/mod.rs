//! Closed magnetic geodesics: Newton shooting in the universal cover,
//! closed-form hypercycles on constant-curvature surfaces, continuation in a
//! deformation parameter, and a persistent orbit store.

mod continuation;
mod database;
mod deck;
mod oracle;
mod shooting;
mod types;

pub use continuation::{continue_in_lambda_scale, continue_in_parameter, ContinuationPoint};
pub use database::{OrbitDatabase, OrbitRecord};
pub use deck::{hyperbolic_class, wrap_angle, Deck};
pub use oracle::{disk_deck, hyperbolic_orbit_oracle, HypercycleOracle};
pub use shooting::{closure_defect, shoot_and_refine, ShootingOptions};
pub use types::{ClosedOrbit, Stability, TopologicalClass};
