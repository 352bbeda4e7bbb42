//! Energy identities on `SM`, the index form along closed orbits and the
//! free-time action.

mod action;
mod index;
mod pestov;
mod report;

pub use action::{first_variation_check, free_time_action, FirstVariationReport, FreeTimeAction};
pub use index::{index_form, index_form_sweep, periodic_riccati, IndexFormEvaluation, IndexSweep, PeriodicFunction};
pub use pestov::{
    identity_quadrature, integrated_identities, pestov_pointwise, theorem_b_mechanism, MechanismReport, PestovReport, PestovResidual,
};
pub use report::{Bound, IdentityRecord};
