//! Radially symmetric parabolic–elliptic Keller–Segel laboratory.
//!
//! The system `u_t = Δ(u+1)^m - ∇·(u χ(v) ∇v)`, `0 = Δv - v + u` on a ball
//! in `N >= 3` dimensions is advanced in the volume coordinate `s = r^N`
//! through the cumulative mass `w(s, t)`. Alongside the simulator live the
//! parameter arithmetic of the blow-up regime ([`params`]), the special
//! quadratures it needs ([`quadrature`]), and the moment-functional
//! diagnostics that check the estimates along simulated trajectories
//! ([`diagnostics`]). [`cli_io`] wires these into the `kslab` binary.

pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod params;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
