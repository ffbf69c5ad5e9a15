use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit reports. Validation errors are detected before
/// any computation starts; the remaining variants arise at run time.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{path}: row {row}, column `{column}`: {message}")]
    Cell {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid knowledge: {}", .0.join("; "))]
    Knowledge(Vec<String>),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("graph contains a directed cycle")]
    Cycle,

    #[error("orientation contradiction on edge {from} -> {to}: {reason}")]
    Orientation {
        from: String,
        to: String,
        reason: String,
    },

    #[error("Markov equivalence class exceeds the cap of {cap} DAGs{}", replicate_suffix(*.replicate))]
    MecCapExceeded { cap: usize, replicate: Option<usize> },

    #[error("no DAG extends the CPDAG under the given knowledge{}", replicate_suffix(*.replicate))]
    NoExtension { replicate: Option<usize> },

    #[error("data error: {0}")]
    Data(String),

    #[error("logistic regression: perfectly separable data requires lambda > 0")]
    PerfectSeparation,

    #[error("logistic regression did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NoConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("external scorer: {0}")]
    Scorer(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn replicate_suffix(replicate: Option<usize>) -> String {
    match replicate {
        Some(b) => format!(" (bootstrap replicate {b})"),
        None => String::new(),
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a provenance label such as `model 3` or `row 17`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors that stem from bad inputs rather than a failed run.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Config(_)
            | Error::Schema(_)
            | Error::Cell { .. }
            | Error::Knowledge(_)
            | Error::UnknownVariable(_) => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
