//! Radial solver in the volume coordinate `s = r^N`.

mod elliptic;
mod grid;
mod initial;
mod run;
mod sensitivity;
mod state;
mod step;
mod tridiag;

pub use elliptic::{
    compute_w, compute_z, cumulative_cells, differentiate_w, elliptic_residual, manufactured_elliptic_error, solve_elliptic,
    EllipticSolution,
};
pub use grid::RadialGrid;
pub use initial::{build_initial_data, InitialProfile};
pub use run::{
    detect_blowup, run, run_with, BlowupReport, Record, RunOutcome, RunSetup, StepControl, Termination, TimeSeries, Verdict,
    DETECTION_WINDOW,
};
pub use sensitivity::{NoTaxis, PowerLaw, Sensitivity};
pub use state::State;
pub use step::Stepper;
pub use tridiag::solve_tridiagonal;
