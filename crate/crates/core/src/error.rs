use thiserror::Error;

/// Errors raised by instance construction, input validation and the
/// desk-scale guardrails.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("unknown agent `{0}`")]
    UnknownAgent(String),

    #[error("unknown object `{0}`")]
    UnknownObject(String),

    #[error("invalid preference: {0}")]
    InvalidPreference(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("compromiser assignment has an empty or missing cell at infeasible allocation {0}")]
    MissingCell(String),

    #[error("compromiser assignment has a nonempty cell at feasible allocation {0}")]
    CellOnFeasible(String),

    #[error("invalid mechanism parameters: {0}")]
    InvalidSpec(String),

    #[error("instance mismatch: {0}")]
    InstanceMismatch(String),

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    #[error("local priority algorithm exhausted agent {agent} at step {step} on profile {profile}")]
    NotImplementable {
        profile: String,
        agent: String,
        step: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
