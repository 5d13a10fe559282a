use thiserror::Error;

/// Errors raised anywhere in the hull generation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate hull parameters: {0}")]
    DegenerateParams(String),

    #[error("degenerate hull: {0}")]
    DegenerateHull(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("wave-resistance quadrature did not converge: {n_theta} panels gave {coarse:e}, {fine_panels} gave {fine:e}")]
    QuadratureNonConverged {
        n_theta: usize,
        fine_panels: usize,
        coarse: f64,
        fine: f64,
    },

    #[error("degenerate statistics: {0}")]
    DegenerateStats(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty evaluation: {0}")]
    EmptyEvaluation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
