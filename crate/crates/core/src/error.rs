use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate matrix: every singular value is below the rank threshold")]
    DegenerateMatrix,

    #[error("singular matrix: pivot {pivot:e} below threshold {threshold:e} at column {column}")]
    SingularMatrix {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("conjugate gradient did not reach relative residual {target:e} in {iterations} iterations (last {achieved:e})")]
    Convergence {
        iterations: usize,
        target: f64,
        achieved: f64,
    },

    #[error("instance certification failed: {0}")]
    CertificationFailed(String),

    #[error("numerical divergence at iteration {iteration}")]
    Divergence { iteration: u64 },

    #[error("no feasible basis found")]
    Infeasible,

    #[error("stages undefined: run never reached the distance tolerance")]
    Unsolved,

    #[error("{count} unsolved record(s) present: seeds {seeds:?}")]
    UnsolvedRecords { count: usize, seeds: Vec<u64> },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
