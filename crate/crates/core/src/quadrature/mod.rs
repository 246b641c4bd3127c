//! Specialized integration: beta identities, singular-weight moment rules,
//! the heat-kernel integral behind the signal lower bound, and the
//! double-integral bound used for the cross-diffusion estimate.

mod adaptive;
mod bessel;
mod beta;
mod gridded;
mod heat;
mod jacobi;
mod lemma38;

pub use adaptive::{integrate, Integral, Tolerance};
pub use bessel::bessel_k;
pub use beta::{beta, beta_integral, ln_beta};
pub use gridded::{singular_moment_quad, GridMomentRule};
pub use heat::{heat_kernel_bessel, heat_kernel_integral};
pub use jacobi::SingularWeightRule;
pub use lemma38::{lemma38_lhs, lemma38_ratio};
