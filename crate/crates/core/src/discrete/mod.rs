//! Exact arithmetic over discrete joint distributions.
//!
//! Tables are dense and indexed in mixed radix with variable 0 as the most
//! significant digit. All information quantities are in nats, with the
//! convention `0 ln 0 = 0`.

mod clamps;
mod dataset;
mod joint;
mod space;

pub use clamps::Clamps;
pub use dataset::Dataset;
pub use joint::{
    empirical_distribution, kl_divergence, total_variation, ConditionalTable, JointTable,
};
pub(crate) use space::check_subset;
pub use space::{Assignment, Value, VarSpace, MAX_DENSE_STATES};
