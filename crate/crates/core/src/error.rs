use thiserror::Error;

/// Errors raised by the theory arithmetic, quadrature, solver and I/O layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("out of scope: {0}")]
    Scope(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("empty interval: {0}")]
    EmptyInterval(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge (achieved error {achieved:e}, requested {requested:e})")]
    NonConvergence { achieved: f64, requested: f64 },

    #[error("infeasible initial data: {0}")]
    Infeasible(String),

    #[error("singular tridiagonal system at row {0}")]
    SingularMatrix(usize),

    #[error("step rejected: {0}")]
    StepRejected(String),

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
