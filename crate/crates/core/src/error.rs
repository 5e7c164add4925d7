use thiserror::Error;

/// Errors raised by the plank toolkit.
#[derive(Debug, Error)]
pub enum PlankError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("row {row} is not a unit vector (norm {norm})")]
    NotUnit { row: usize, norm: f64 },

    #[error("entry {index} of w is zero")]
    ZeroEntry { index: usize },

    #[error("not a Gram matrix: {0}")]
    NotGram(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver did not converge in quadrant {quadrant} (residual {residual:e} after {iterations} iterations)")]
    NonConvergence {
        quadrant: String,
        residual: f64,
        iterations: usize,
    },

    #[error("witness not certified: best min margin {best_margin} < bound {bound} (path {path})")]
    Uncertified {
        best_margin: f64,
        bound: f64,
        path: String,
    },

    #[error("contradiction search failed: max |T| = {best} on the search range")]
    NoContradiction { best: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PlankError>;
