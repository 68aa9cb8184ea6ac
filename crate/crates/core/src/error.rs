use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid configuration: {0}")]
    InvalidConfig(String),

    #[error("enumeration bound exceeded: {0}")]
    DepthExceeded(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate pair: points share coordinate on axis {axis}")]
    DegeneratePair { axis: usize },

    #[error("box is not aligned to the lattice: {0}")]
    Alignment(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("exponent constraint violated: {0}")]
    Exponent(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
