use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid orthonormal frame: {0}")]
    InvalidFrame(String),

    #[error("invalid projector set: {0}")]
    InvalidProjectors(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("incomparable polarities: {0}")]
    IncomparablePolarity(String),

    /// Target distribution is not reachable from the current state.
    #[error("infeasible transition {context}: majorization slack {slack:.6} exceeds tolerance {tol}")]
    Infeasible { context: String, slack: f64, tol: f64 },

    #[error("optimizer did not converge after {starts} starts (best residual {best_residual:e})")]
    NonConvergence { starts: usize, best_residual: f64 },

    #[error("survey ingestion failed: {0}")]
    Ingest(String),

    #[error("invalid local series: {0}")]
    InvalidSeries(String),
}

pub type Result<T> = std::result::Result<T, Error>;
