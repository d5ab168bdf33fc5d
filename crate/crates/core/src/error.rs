use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tail model: {0}")]
    InvalidModel(String),

    #[error("invalid coefficient sequence: {0}")]
    InvalidCoefficients(String),

    #[error("coefficient family is not summable: {0}")]
    NotSummable(String),

    #[error("index ({row}, {col}) outside noise panel rows [{row_lo}, {row_hi}) cols [{col_lo}, {col_hi})")]
    OutOfPanel {
        row: i64,
        col: i64,
        row_lo: i64,
        row_hi: i64,
        col_lo: i64,
        col_hi: i64,
    },

    #[error("noise panel does not cover rows [{need_rows:?}] x cols [{need_cols:?}]; panel has rows [{have_rows:?}] x cols [{have_cols:?}]")]
    InsufficientCoverage {
        need_rows: (i64, i64),
        need_cols: (i64, i64),
        have_rows: (i64, i64),
        have_cols: (i64, i64),
    },

    #[error("empty index range")]
    EmptyRange,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("eigensolver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("alpha = {0} outside (0, 4)")]
    AlphaOutOfRange(f64),

    #[error("ensemble validation failed: {0}")]
    Validation(String),

    #[error("empty sample")]
    EmptySample,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
