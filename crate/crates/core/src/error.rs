use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed or out-of-range input supplied by the caller.
    #[error("input error: {0}")]
    Input(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// The operation needs a structural property the input lacks.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An explicit work limit ran out before an exact answer was known.
    #[error("work limit exceeded: {what} (limit {limit}){}", lower_bound_note(*.lower_bound))]
    Budget {
        what: String,
        limit: u64,
        lower_bound: Option<u64>,
    },

    /// A verification step found the output does not have a promised property.
    #[error("violation: {0}")]
    Violation(String),
}

fn lower_bound_note(lb: Option<u64>) -> String {
    match lb {
        Some(v) => format!("; best found so far is only a lower bound: {v}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
