use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid variable space: {0}")]
    InvalidSpace(String),

    #[error("joint space has {states} states, above the dense-table limit of {limit}")]
    TooLarge { states: u64, limit: u64 },

    #[error("variable spaces do not match")]
    SpaceMismatch,

    #[error("unknown variable id {0}")]
    UnknownVariable(usize),

    #[error("variable subset must not be empty")]
    EmptySubset,

    #[error("variable {0} appears in both the target and the conditioning set")]
    Overlap(usize),

    #[error("value {value} out of range for variable {var} (cardinality {card})")]
    ValueOutOfRange {
        var: usize,
        value: usize,
        card: usize,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("e-geodesic requires positive distributions")]
    NonPositive,

    #[error("conditional row {row} of node {node} is undefined (no data)")]
    UndefinedRow { node: usize, row: usize },

    #[error("invalid conditional probability table for node {node}: {reason}")]
    InvalidCpt { node: usize, reason: String },

    #[error("every node is clamped; nothing to fire")]
    AllClamped,

    #[error(
        "stationary solver did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("graph contains a cycle")]
    Cyclic,

    #[error("cannot place {edges} edges on {nodes} nodes")]
    InfeasibleEdges { nodes: usize, edges: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
