use thiserror::Error;

/// Errors surfaced by solvers, generators and evaluators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The instance is missing data (e.g. an edge without a cost model).
    #[error("incomplete instance: {0}")]
    IncompleteInstance(String),

    /// An exact enumeration would exceed its configured cap.
    #[error("enumeration too large: {0}")]
    TooLarge(String),

    /// A task cost was requested for a task with no assigned agent,
    /// which signals a broken initial assignment.
    #[error("task {0} has no assigned agent")]
    UncoveredTask(usize),

    /// Adding a pair would break the one-task-per-agent constraint.
    #[error("invalid augmentation: {0}")]
    InvalidAugmentation(String),

    #[error("infeasible instance: {0}")]
    InfeasibleInstance(String),

    #[error("network is disconnected: {0}")]
    Disconnected(String),
}

pub type Result<T> = std::result::Result<T, Error>;
