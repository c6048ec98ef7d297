use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got} in {context}")]
    ShapeMismatch {
        expected: String,
        got: String,
        context: String,
    },

    #[error("non-finite entry at ({row}, {col}): {value}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("empty matrix: rows and cols must both be >= 1")]
    EmptyMatrix,

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("domain violation for {distance}: {reason}")]
    DomainViolation { distance: String, reason: String },

    #[error("last-block constraint matrix is row-rank deficient (sigma_C = 0)")]
    RankDeficient,

    #[error("subproblem solver failed on block '{block}': {source}")]
    SolverFailure {
        block: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(expected: impl Into<String>, got: impl Into<String>, context: &str) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            got: got.into(),
            context: context.to_string(),
        }
    }
}
