use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("storage fraction {mu} outside [1/{users}, 1]")]
    MuOutOfRange { mu: String, users: usize },

    #[error("file count {files} is not valid for this placement: {reason}{}", suggestion.map(|n| format!(" (nearest valid file count: {n})")).unwrap_or_default())]
    DivisibilityViolation {
        files: usize,
        reason: String,
        suggestion: Option<usize>,
    },

    #[error("parameter `{0}` must be positive")]
    ZeroSize(&'static str),

    #[error("{0} users exceed the simulator limit of 63")]
    TooManyUsers(usize),

    #[error("placement mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("oracle called with an empty set of available files")]
    EmptyAvailableSet,

    #[error("reduce at user {user} is missing the value for file {file}")]
    MissingValue { user: usize, file: usize },

    #[error("user {user} is missing a segment of subset {subset}")]
    MissingSegment { user: usize, subset: String },

    #[error("inconsistent payload lengths: {0}")]
    InconsistentLengths(String),

    #[error("division by zero in GF(256)")]
    DivideByZero,

    #[error("a {rows}x{cols} coefficient matrix does not fit in GF(256)")]
    SizeExceedsField { rows: usize, cols: usize },

    #[error("no acceptable random coefficient matrix after {0} draws")]
    RetryLimitExceeded(u32),

    #[error("coefficient matrix is singular")]
    SingularMatrix,

    #[error("lower bound needs a placement without lost files ({0} files unstored)")]
    LostFilesPresent(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
