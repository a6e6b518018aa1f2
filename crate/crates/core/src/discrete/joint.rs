use super::dataset::Dataset;
use super::space::{check_subset, Value, VarSpace};
use crate::error::{Error, Result};

/// Tolerance on the total mass accepted by [`JointTable::new`].
const MASS_TOLERANCE: f64 = 1e-9;

/// Dense normalized probability table over a [`VarSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    space: VarSpace,
    probs: Vec<f64>,
}

impl JointTable {
    /// Wraps a probability vector. Mass must be within 1e-9 of one; vectors
    /// off by more than 1e-12 are renormalized, others are kept bit for bit.
    pub fn new(space: VarSpace, probs: Vec<f64>) -> Result<Self> {
        let len = space.dense_len()?;
        if probs.len() != len {
            return Err(Error::InvalidDistribution(format!(
                "{} entries for {len} states",
                probs.len()
            )));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidDistribution(
                "entries must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Self::from_weights(space, probs);
        }
        Ok(Self { space, probs })
    }

    /// Normalizes non-negative weights into a table.
    pub fn from_weights(space: VarSpace, mut weights: Vec<f64>) -> Result<Self> {
        let len = space.dense_len()?;
        if weights.len() != len {
            return Err(Error::InvalidDistribution(format!(
                "{} entries for {len} states",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum.is_nan() || sum <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self {
            space,
            probs: weights,
        })
    }

    pub fn uniform(space: VarSpace) -> Result<Self> {
        let len = space.dense_len()?;
        Ok(Self {
            space,
            probs: vec![1.0 / len as f64; len],
        })
    }

    pub fn space(&self) -> &VarSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn prob(&self, values: &[Value]) -> f64 {
        self.probs[self.space.index_of(values) as usize]
    }

    pub fn is_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    /// Marginal over `vars`, in the listed order.
    pub fn marginal(&self, vars: &[usize]) -> Result<JointTable> {
        if vars.is_empty() {
            return Err(Error::EmptySubset);
        }
        check_subset(&self.space, vars)?;
        let sub = self.space.subspace(vars)?;
        let weights = self.marginal_weights(vars);
        JointTable::from_weights(sub, weights)
    }

    /// Unnormalized marginal mass over `vars` (length 1 for the empty set).
    pub(crate) fn marginal_weights(&self, vars: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.space.configs(vars) as usize];
        self.space
            .for_each_projected(vars, |state, proj| out[proj] += self.probs[state]);
        out
    }

    /// Conditional table `p(T | G)`.
    pub fn conditional(&self, target: &[usize], given: &[usize]) -> Result<ConditionalTable> {
        if target.is_empty() {
            return Err(Error::EmptySubset);
        }
        check_disjoint(&self.space, target, given)?;
        let joint_vars: Vec<usize> = given.iter().chain(target).copied().collect();
        let mass = self.marginal_weights(&joint_vars);
        let width = self.space.configs(target) as usize;
        let rows = mass
            .chunks_exact(width)
            .map(|chunk| {
                let total: f64 = chunk.iter().sum();
                (total > 0.0).then(|| chunk.iter().map(|m| m / total).collect())
            })
            .collect();
        Ok(ConditionalTable {
            target: target.to_vec(),
            given: given.to_vec(),
            target_space: self.space.subspace(target)?,
            rows,
        })
    }

    /// Entropy in nats of the marginal over `vars`.
    pub fn entropy(&self, vars: &[usize]) -> Result<f64> {
        if vars.is_empty() {
            return Err(Error::EmptySubset);
        }
        check_subset(&self.space, vars)?;
        Ok(entropy_of(&self.marginal_weights(vars)))
    }

    /// `H(T | G)` in nats; with `G` empty this is the plain entropy of `T`.
    pub fn conditional_entropy(&self, target: &[usize], given: &[usize]) -> Result<f64> {
        if target.is_empty() {
            return Err(Error::EmptySubset);
        }
        check_disjoint(&self.space, target, given)?;
        let joint_vars: Vec<usize> = given.iter().chain(target).copied().collect();
        let mass = self.marginal_weights(&joint_vars);
        let width = self.space.configs(target) as usize;
        let mut h = 0.0;
        for chunk in mass.chunks_exact(width) {
            let total: f64 = chunk.iter().sum();
            for &m in chunk {
                if m > 0.0 {
                    h -= m * (m / total).ln();
                }
            }
        }
        Ok(h)
    }

    /// Full conditional `p(x_i | x_{-i})` for every state, 0/0 mapped to NaN.
    pub(crate) fn full_conditional(&self, var: usize) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.probs.len()];
        for_each_group(&self.space, var, |members| {
            let total: f64 = members.clone().map(|s| self.probs[s]).sum();
            if total > 0.0 {
                for s in members {
                    out[s] = self.probs[s] / total;
                }
            }
        });
        out
    }

    /// `p(x_{-i})` evaluated at every state.
    pub(crate) fn complement_marginal(&self, var: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.probs.len()];
        for_each_group(&self.space, var, |members| {
            let total: f64 = members.clone().map(|s| self.probs[s]).sum();
            for s in members {
                out[s] = total;
            }
        });
        out
    }
}

/// Calls `f` once per assignment of `X_{-var}` with the state indices that
/// share it (one per value of `var`, in value order).
pub(crate) fn for_each_group(
    space: &VarSpace,
    var: usize,
    mut f: impl FnMut(std::iter::StepBy<std::ops::Range<usize>>),
) {
    let stride = space.stride(var) as usize;
    let card = space.card(var);
    let block = stride * card;
    let total = space.total_states() as usize;
    for start in (0..total).step_by(block) {
        for base in start..start + stride {
            f((base..base + block).step_by(stride));
        }
    }
}

fn check_disjoint(space: &VarSpace, target: &[usize], given: &[usize]) -> Result<()> {
    check_subset(space, target)?;
    check_subset(space, given)?;
    if let Some(&v) = target.iter().find(|v| given.contains(v)) {
        return Err(Error::Overlap(v));
    }
    Ok(())
}

fn entropy_of(mass: &[f64]) -> f64 {
    mass.iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| -m * m.ln())
        .sum()
}

/// Rows `p(T | g)` for each assignment `g` of the conditioning set.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    pub target: Vec<usize>,
    pub given: Vec<usize>,
    pub target_space: VarSpace,
    /// Indexed by the mixed-radix index of `g`; `None` where `p(g) = 0`.
    pub rows: Vec<Option<Vec<f64>>>,
}

impl ConditionalTable {
    pub fn row(&self, given_index: usize) -> Option<&[f64]> {
        self.rows.get(given_index)?.as_deref()
    }
}

/// Empirical distribution of a dataset.
pub fn empirical_distribution(d: &Dataset) -> Result<JointTable> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let len = d.space().dense_len()?;
    let mut counts = vec![0.0; len];
    for row in d.rows() {
        counts[d.space().index_of(row) as usize] += 1.0;
    }
    let n = d.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    Ok(JointTable {
        space: d.space().clone(),
        probs: counts,
    })
}

/// `KL(p || q)` in nats; `+inf` when `p` puts mass where `q` has none.
pub fn kl_divergence(p: &JointTable, q: &JointTable) -> Result<f64> {
    if p.space != q.space {
        return Err(Error::SpaceMismatch);
    }
    let mut kl = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += a * (a / b).ln();
        }
    }
    Ok(kl)
}

/// Total variation distance `0.5 * sum |p - q|`.
pub fn total_variation(p: &JointTable, q: &JointTable) -> Result<f64> {
    if p.space != q.space {
        return Err(Error::SpaceMismatch);
    }
    Ok(0.5
        * p.probs
            .iter()
            .zip(&q.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}
