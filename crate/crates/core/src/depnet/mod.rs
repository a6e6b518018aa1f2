//! Dependency-network representation and learning.

mod learn;
mod network;

pub(crate) use learn::cpt_from_stats;
pub use learn::{
    learn, learn_parameters, learn_structure_node, penalty, scost, strictly_better, LearnOptions,
    LearnedNetwork, NodeSearch, PenaltySpec, SuffStats, SCORE_EPS,
};
pub use network::DependencyNetwork;
