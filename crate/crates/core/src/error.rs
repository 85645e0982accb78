use thiserror::Error;

use crate::bell::Scenario;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("scenario mismatch: expected {expected}, found {found}")]
    ScenarioMismatch { expected: Scenario, found: Scenario },

    #[error("unsupported scenario {0}: {1}")]
    UnsupportedScenario(Scenario, &'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid correlators: {0}")]
    InvalidCorrelators(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// The conic program has no feasible point (e.g. the behavior lies
    /// outside the relaxed set or signals).
    #[error("infeasible program: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("certificate not verified: {0}")]
    Unverified(String),

    #[error("missing dual data: {0}")]
    MissingDual(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
