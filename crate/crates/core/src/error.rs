use crate::model::{AgentId, EdgeId};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("non-positive weight at edge {0}")]
    NonPositiveWeight(EdgeId),
    #[error("self-loop at edge {0}")]
    SelfLoop(EdgeId),
    #[error("agent id out of range at edge {0}")]
    AgentOutOfRange(EdgeId),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("edge id {0} out of range")]
    EdgeOutOfRange(EdgeId),
    #[error("skeleton is not bipartite")]
    NotBipartite,
    #[error("structure mismatch: {0}")]
    Structure(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("agent {0} is not envied")]
    NotEnvied(AgentId),
    #[error("odd 3-cycle unsupported; use oracle")]
    TriangleUnsupported,
    #[error("search space of {states} states exceeds budget {budget}")]
    BudgetExceeded { states: String, budget: u64 },
    #[error("invalid family spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
