use thiserror::Error;

/// Errors raised by plan construction, operator application and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grids are not node-aligned: {0}")]
    Misaligned(String),

    #[error("imaginary residue {ratio:.3e} exceeds tolerance in {stage}")]
    ImaginaryResidue { stage: &'static str, ratio: f64 },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(expected: impl std::fmt::Debug, got: impl std::fmt::Debug) -> Error {
    Error::ShapeMismatch {
        expected: format!("{expected:?}"),
        got: format!("{got:?}"),
    }
}
