use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("signal contains a non-finite sample at index {index}")]
    NonFiniteSample { index: usize },

    #[error("empty signal")]
    EmptySignal,

    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {rows} data rows available, {needed} needed")]
    ShortFile {
        path: PathBuf,
        rows: usize,
        needed: usize,
    },

    #[error("{path}: row {row} has no column {column}")]
    MissingColumn {
        path: PathBuf,
        row: usize,
        column: usize,
    },

    #[error("{path}: row {row}, column {column}: `{cell}` is not a number")]
    NonNumericCell {
        path: PathBuf,
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("malformed CSV in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("placement produced an all-zero row in {attempts} consecutive attempts")]
    ZeroRowPlacement { attempts: usize },

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("sensing matrix composition failed at {link}: {expected} vs {actual}")]
    CompositionMismatch {
        link: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("least-squares fit on the selected support is singular at iteration {iteration}")]
    SingularSupport { iteration: usize },

    #[error("sensing matrix is rank deficient (rank {rank} < {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },

    #[error("measurements are not in the range of the sensing matrix (residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("basis pursuit did not converge within {iterations} pivots")]
    NotConverged {
        iterations: usize,
        best_iterate: Vec<f64>,
    },

    #[error("exhaustive search over {combinations} supports exceeds the limit of {limit}")]
    SearchTooLarge { combinations: u128, limit: u128 },

    #[error("no support of size <= {max_sparsity} reproduces the measurements")]
    NoFeasibleSupport { max_sparsity: usize },

    #[error("recovery error undefined for a zero ground-truth signal")]
    ZeroReference,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration key `{key}`: {reason}")]
    Config { key: String, reason: String },
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
