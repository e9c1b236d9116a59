use thiserror::Error;

/// Errors raised by the phase-space algebra, the Fock oracle and the
/// measurement pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("variance must satisfy V >= 1, got {0}")]
    InvalidVariance(f64),

    #[error("mode {mode} out of range for a {modes}-mode state")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Gaussian integral diverges (pivot {0} has non-positive real part)")]
    NonIntegrable(String),

    #[error("state is not hermitian: imaginary residue {residue:e} exceeds {tolerance:e}")]
    Hermiticity { residue: f64, tolerance: f64 },

    #[error("state has vanishing or non-positive trace {0:e}")]
    ZeroTrace(f64),

    #[error("qubit amplitudes are not normalized: |c0|^2 + |c1|^2 = {0}")]
    UnnormalizedQubit(f64),

    #[error("Fock cutoff {cutoff} insufficient: truncation deficit {deficit:e}")]
    CutoffInsufficient { cutoff: usize, deficit: f64 },

    #[error("negative marginal density {value:e} at x = {x}")]
    NegativeDensity { x: f64, value: f64 },

    #[error("infeasible outcome: {0}")]
    Infeasible(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
