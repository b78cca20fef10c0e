use thiserror::Error;

/// Errors raised while ingesting ratings or computing agreement statistics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid configuration: category lists, rater indices, model parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// The data file contained no subject rows.
    #[error("data file contains no subject rows")]
    EmptyData,

    /// A data row did not have the rater count fixed by the first row.
    #[error("line {line}: expected {expected} ratings, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    /// The first data row defines fewer than two raters.
    #[error("line {line}: at least 2 raters are required, found {found}")]
    TooFewRaters { line: usize, found: usize },

    /// No subject was rated by every rater under consideration.
    #[error("no subjects were rated by every rater under consideration")]
    EmptyOverlap,

    /// Chance agreement is 1: every rating fell in a single category.
    #[error("undefined (single-category data)")]
    DegenerateMarginals,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
