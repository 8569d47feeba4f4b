use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A configuration document failed validation at the given JSON pointer.
    #[error("config error at `{pointer}`: {message}")]
    Config { pointer: String, message: String },

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error(
        "explicit operator needs {required} bytes but the memory budget is {budget} bytes; \
         use the matrix-free representation instead"
    )]
    MemoryBudget { required: u64, budget: u64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "solver diverged at iteration {iteration}: E_d grew from {window_start:.3e} to {current:.3e} \
         within {window} iterations"
    )]
    Divergence {
        iteration: usize,
        window: usize,
        window_start: f64,
        current: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
