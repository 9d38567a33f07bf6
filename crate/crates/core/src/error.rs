use alloc::string::String;

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid action {action} (K = {num_actions})")]
    InvalidAction { action: usize, num_actions: usize },
    #[error("no playable arm")]
    NoPlayableArm,
    #[error("improper prior")]
    ImproperPrior,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("optimizer did not converge after {0} iterations")]
    NonConvergence(usize),
    #[error("horizon exceeds dataset")]
    HorizonExceedsDataset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("support too large for exact enumeration ({0} outcomes); use Monte Carlo estimator")]
    SupportTooLarge(u128),
    #[error("slope undefined: {0}")]
    SlopeUndefined(String),
    #[error("horizon mismatch: {0} vs {1}")]
    HorizonMismatch(usize, usize),
    #[error("unknown policy spec: {0}")]
    UnknownPolicy(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
