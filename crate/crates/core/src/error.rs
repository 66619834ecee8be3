use thiserror::Error;

/// Errors produced by matrix construction, projections and generators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite entry at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid tolerance: {0}")]
    Tolerance(String),

    /// Ker([T,1]') is trivial, so no distinct attention matrix can share
    /// the product A·T. Raised by the adversarial generator.
    #[error("attention is identifiable: Ker([T,1]') is trivial, no adversarial exists")]
    Identifiable,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    /// A numerical guarantee failed beyond the configured tolerance.
    #[error("validation failed: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
