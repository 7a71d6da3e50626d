use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("size bound exceeded: {what} is {actual}, limit {limit}")]
    BoundExceeded {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("unknown optimizer {name:?}: {hint}")]
    UnknownOptimizer { name: String, hint: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by a memory or enumeration guard.
    pub fn is_resource_bound(&self) -> bool {
        matches!(self, Error::BoundExceeded { .. })
    }

    /// Process exit code: 3 for resource bounds, 2 for invalid input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BoundExceeded { .. } => 3,
            Error::Io(_) | Error::Csv(_) | Error::NoConvergence(_) => 1,
            _ => 2,
        }
    }
}
