use thiserror::Error;

/// Data and configuration errors surfaced by the engine.
///
/// Iterator contract violations (illegal call sequences) are programming
/// errors, not data errors; those panic with a diagnostic instead of
/// returning a variant here.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input not sorted: tuple at position {position} is not strictly greater than its predecessor")]
    UnsortedInput { position: usize },
    #[error("duplicate tuple at position {position}")]
    DuplicateInput { position: usize },
    #[error("arity mismatch: expected {expected}, got {got} at position {position}")]
    ArityMismatch {
        expected: usize,
        got: usize,
        position: usize,
    },
    #[error("value {value} at position {position} is reserved as a sentinel")]
    SentinelValue { value: i64, position: usize },
    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("truncated file while reading {field}")]
    Truncated { field: &'static str },
    #[error("trie invariant violated: {0}")]
    InvariantViolation(String),
    #[error("query parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("infeasible memory budget: {0}")]
    InfeasibleBudget(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
