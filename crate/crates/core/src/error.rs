use thiserror::Error;

/// Errors raised by the machine model and its numerics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}: only 2, 4 and 8 are supported")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |A - A^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("ancilla of bath {bath} is not a valid state at tau = {tau}: coherence requires tau <= {max_tau:e}")]
    AncillaPositivity { bath: usize, tau: f64, max_tau: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quantity diverges: {0}")]
    Divergent(String),

    #[error("steady state kernel is degenerate (second smallest singular value {0:e})")]
    DegenerateKernel(f64),

    #[error("sequence does not converge: {0}")]
    NonConvergent(String),

    #[error("integration step rejected: {0}")]
    StepRejected(String),

    #[error("no root in bracket [{lo}, {hi}]: {reason}")]
    NoRoot { lo: f64, hi: f64, reason: String },

    #[error("output error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Errors caused by the numerics rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateKernel(_)
                | Error::NonConvergent(_)
                | Error::StepRejected(_)
                | Error::NoRoot { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
