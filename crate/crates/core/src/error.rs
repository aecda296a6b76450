use thiserror::Error;

use crate::model::ValidationReport;

/// Errors raised by model construction and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Input(String),

    #[error("invalid model: {0}")]
    InvalidModel(ValidationReport),

    #[error("assignment has {got} entries but the model has {expected} nodes")]
    AssignmentLength { expected: usize, got: usize },

    #[error("state {state} of node {node} is outside its cardinality {cardinality}")]
    StateOutOfRange {
        node: usize,
        state: usize,
        cardinality: usize,
    },

    #[error("joint state space of {states} configurations exceeds the enumeration cap of {cap}")]
    StateCapExceeded { states: u128, cap: u64 },

    #[error("nodes {0} and {1} are not joined by an edge")]
    NotAnEdge(usize, usize),

    #[error("missing message {from} -> {to}")]
    MissingMessage { from: usize, to: usize },

    #[error("missing edge beliefs")]
    MissingEdgeBeliefs,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("distribution is not normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("consistency map is rank deficient (C^T C is singular)")]
    SingularConsistencyMap,

    #[error("agent {agent}: {message}")]
    Agent { agent: usize, message: String },

    #[error(
        "pairwise matrix M of agent {agent} is indefinite (smallest eigenvalue {min_eigenvalue:.3e}); \
         indefinite interactions need a semidefinite relaxation, which is not implemented"
    )]
    IndefiniteInteraction { agent: usize, min_eigenvalue: f64 },

    #[error("topology is disconnected; belief consensus needs a connected network")]
    DisconnectedTopology,

    #[error("unknown agent `{0}` in topology")]
    UnknownAgent(String),

    #[error("invalid hypothesis bank: {0}")]
    InvalidBank(String),

    #[error("invalid evidence for agent `{agent}`: {message}")]
    InvalidEvidence { agent: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
