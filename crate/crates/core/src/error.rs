use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("result set is empty")]
    EmptyResultSet,

    #[error("strategy ({gamma}, {epsilon}) lies outside the sampled grid")]
    OutOfDomain { gamma: f64, epsilon: f64 },

    #[error("oracle cannot evaluate: {0}")]
    OracleDomain(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("non-finite loss at round {round}: {detail}")]
    NonFiniteLoss { round: usize, detail: String },

    #[error("trace has not converged")]
    NotConverged,

    #[error("no level set yields a valid pair")]
    InsufficientLevelSetPairs,

    #[error("subgroup {0} has no records or no complement")]
    EmptyGroup(usize),

    #[error("group {0} missing from input")]
    MissingGroup(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error stems from bad user input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_) | Error::Parse(_) | Error::InvalidRange(_) | Error::MissingGroup(_)
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
