//! Full-conditional manifolds and exact pseudo-Gibbs oracles.
//!
//! Firing node `i` moves a distribution `p` to its m-projection
//! `p(x_{-i}) θ_i(x_i | y_i)` onto the manifold of distributions whose full
//! conditional for `X_i` is `θ_i`. The functions here evaluate those
//! projections, divergences to the manifolds, and the stationary
//! distributions of the resulting chains exactly on small joint spaces.

mod markov;
mod projection;

pub use markov::{
    fixed_point_residual, node_matrix, ordered_phase_distributions, stationary_exact,
    stationary_ordered_exact, transition_matrix, TransitionMatrix, MAX_CHAIN_STATES,
    MAX_POWER_ITERATIONS, STATIONARY_TOLERANCE,
};
pub(crate) use projection::cpt_cell_per_state;
pub use projection::{
    conditional_residual, e_geodesic_point, fc_divergence, kl_to_manifold, m_geodesic_point,
    m_project, manifold_bound, theorem3_slack,
};
