use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has no cell inside the domain")]
    EmptyDomain,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("field is not an indicator (values must be 0, 1 or outside)")]
    NotIndicator,

    #[error("window selects no cell of the grid")]
    EmptyWindow,

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid integrand or weight: {0}")]
    InvalidSpec(String),

    #[error("integrand class error: {0}")]
    SpecClass(String),

    #[error("reference field has zero norm")]
    DegenerateNorm,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
