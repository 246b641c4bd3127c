//! Moment functional, its time-derivative decomposition, and numerical
//! checks of the pointwise and integral inequalities behind blow-up.

mod checks;
mod envelope;
mod moment;
mod odi;

pub use checks::{
    check_i2_lower, check_identity, check_initial_moment, check_lem35, default_lem35_samples, dphi_fd, i2_with,
    identity_floor, observed_order, CheckEntry, IdentityReport,
};
pub use envelope::{empirical_envelopes, EnvelopeTrace};
pub use moment::{ddt_phi_terms, node_ws, node_wss, phi_moment, MomentEvaluator, MomentSpec, MomentTerms};
pub use odi::{odi_fit, OdiFit};
