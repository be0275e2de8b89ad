use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("field has zero norm")]
    ZeroNorm,

    #[error("unsupported stencil: {0}")]
    UnsupportedStencil(String),

    #[error("CFL number {r:.4} exceeds 1")]
    CflViolation { r: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("input state is not normalized (norm {norm:.3e})")]
    Unnormalized { norm: f64 },

    #[error("backend mismatch: {0}")]
    BackendMismatch(String),

    #[error("singular value decomposition failed: {0}")]
    SvdFailure(String),

    #[error("postselected branch vanishes (probability {p:.3e})")]
    VanishingBranch { p: f64 },

    #[error("attempt budget of {budget} exhausted after {successes} successful steps")]
    BudgetExceeded { budget: usize, successes: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
