use thiserror::Error;

/// Errors reported by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A cosine argument of the branching-angle formulas left [-1, 1].
    #[error("infeasible branch angles: {0}")]
    InfeasibleAngles(String),
    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The instance is larger than the configured enumeration cap.
    #[error("capacity exceeded: {atoms} atoms, cap is {cap}")]
    Capacity { atoms: usize, cap: usize },
    /// A chain could not be split into source-to-sink paths.
    #[error("decomposition error: {0}")]
    Decomposition(String),
    /// Malformed serialized input.
    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InfeasibleAngles(_) => "infeasible_angles",
            Error::Precondition(_) => "precondition",
            Error::Capacity { .. } => "capacity",
            Error::Decomposition(_) => "decomposition",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
