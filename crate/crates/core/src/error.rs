/// Errors shared across the crate.
///
/// Contract violations that indicate a bug at the call site (negative
/// stepsizes, mismatched slice lengths in the hot numeric kernels) panic
/// instead; this enum covers failures that depend on runtime data.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("block index {index} out of range for {count} blocks")]
    BlockIndex { index: usize, count: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("non-finite {what} in block {block} at iteration {iteration}")]
    NonFinite {
        what: &'static str,
        block: usize,
        iteration: usize,
    },

    #[error("full gradient oracle unavailable: {0}")]
    NoFullGradient(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
