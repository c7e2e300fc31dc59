use thiserror::Error;

/// Errors produced by the tracking library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),

    #[error("cell index {index} out of range for a grid of {cells} cells")]
    CellOutOfRange { index: usize, cells: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("amplitude {z} does not exceed the threshold {eta}")]
    BelowThreshold { z: f64, eta: f64 },

    #[error("association problem too large to enumerate: {size} > {limit}")]
    EnumerationTooLarge { size: usize, limit: usize },

    #[error("non-finite or negative association weight: {0}")]
    NonFiniteWeight(String),

    #[error("marginal table does not match the association problem: {0}")]
    MarginalMismatch(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by user-supplied configuration or input files,
    /// as opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGeometry(_)
                | Error::InvalidParameter(_)
                | Error::Config(_)
                | Error::Parse { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
