use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state {state} cannot reach goal {goal}")]
    Unreachable { state: usize, goal: usize },

    #[error("state {state} already satisfies goal {goal}; no action is defined")]
    SuccessState { state: usize, goal: usize },

    #[error("no (state, goal) pairs to average over")]
    EmptyPairs,

    #[error("no eligible rollout tasks")]
    NoEligibleTasks,

    #[error("actor loss became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("actor assigns zero probability to action {action} at state {state} where the target law is positive")]
    InfiniteKl { state: usize, action: usize },

    #[error("oracle cache mismatch: {0}")]
    CacheMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
