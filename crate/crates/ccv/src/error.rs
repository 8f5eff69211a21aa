//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (dimension mismatch, out-of-range
    /// value, non-finite input, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The response is uncorrelated with every column at the null fit, so no
    /// positive penalty level activates anything.
    #[error("degenerate grid: the largest penalty level is zero (response is uncorrelated with every column)")]
    DegenerateGrid,

    /// The penalized objective increased across an accepted outer iteration.
    #[error("solver diverged at lambda={lambda}: objective rose by {rise:e}")]
    SolverDivergence { lambda: f64, rise: f64 },

    /// A restricted fit was requested for more columns than the caller allows.
    #[error("active set of size {size} exceeds the size cap {cap}")]
    OversizeActiveSet { size: usize, cap: usize },

    /// A selector could not produce a choice (every position or candidate was
    /// excluded).
    #[error("selection failed: {0}")]
    SelectionFailed(String),

    #[error("csv error in {path} at line {line}: {message}")]
    Csv {
        path: String,
        line: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code for CLI error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DegenerateGrid => "degenerate_grid",
            Error::SolverDivergence { .. } => "solver_divergence",
            Error::OversizeActiveSet { .. } => "oversize_active_set",
            Error::SelectionFailed(_) => "selection_failed",
            Error::Csv { .. } => "csv_parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
