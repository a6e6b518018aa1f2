//! Dependency networks over discrete variables.
//!
//! Each node learns a conditional probability table for its variable from
//! a small, greedily selected input set; pseudo-Gibbs sampling then
//! synthesizes a joint distribution from those tables. Alongside the
//! learner and samplers the crate carries exact, dense-table oracles for
//! the stationary distributions, full-conditional manifolds and
//! divergences involved, a Bayesian-network baseline, and synthetic
//! ground-truth generators.

pub mod bayesnet;
pub mod cpt;
pub mod depnet;
pub mod discrete;
pub mod error;
pub mod eval;
pub mod format;
pub mod gibbs;
pub mod infogeo;
pub mod synth;

pub use bayesnet::BayesianNetwork;
pub use cpt::{Cpt, SelectionWeights};
pub use depnet::{DependencyNetwork, LearnOptions, PenaltySpec};
pub use discrete::{Clamps, Dataset, JointTable, Value, VarSpace};
pub use error::{Error, Result};
pub use gibbs::{Mode, SamplerConfig};
