//! Exact pseudo-Gibbs chains over small joint spaces.

use crate::depnet::DependencyNetwork;
use crate::discrete::{Clamps, JointTable, VarSpace};
use crate::error::{Error, Result};

/// Largest joint space for which a transition matrix is built.
pub const MAX_CHAIN_STATES: u64 = 1 << 16;
/// Power-iteration stopping rule: L1 residual of `πT - π`.
pub const STATIONARY_TOLERANCE: f64 = 1e-12;
pub const MAX_POWER_ITERATIONS: usize = 1_000_000;

/// Sparse row-stochastic matrix over joint states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl TransitionMatrix {
    pub fn n_states(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Non-zero entries `(to, probability)` of row `from`.
    pub fn row(&self, from: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[from]..self.row_ptr[from + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.row(from)
            .find(|&(c, _)| c == to)
            .map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n_states();
        (0..n)
            .map(|x| {
                let mut r = vec![0.0; n];
                for (c, v) in self.row(x) {
                    r[c] = v;
                }
                r
            })
            .collect()
    }

    /// Row vector times matrix, `v T`.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (x, &mass) in v.iter().enumerate() {
            if mass != 0.0 {
                for (c, p) in self.row(x) {
                    out[c] += mass * p;
                }
            }
        }
        out
    }

    /// Builds the matrix of one step that fires node `i` with probability
    /// `weights[i]` (zero weights skipped).
    fn build(dn: &DependencyNetwork, weights: &[f64]) -> Result<Self> {
        let space = dn.space();
        let n_states = space.dense_len_within(MAX_CHAIN_STATES)?;
        let mut row_ptr = Vec::with_capacity(n_states + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut state = vec![0; space.len()];
        let mut scratch: Vec<(u32, f64)> = Vec::new();
        row_ptr.push(0);
        for x in 0..n_states {
            space.decode_into(x as u64, &mut state);
            scratch.clear();
            for (i, &c) in weights.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let cpt = dn.cpt(i);
                let row = cpt.row_for(&state)?;
                let stride = space.stride(i) as usize;
                let base = x - state[i] as usize * stride;
                for (v, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        scratch.push(((base + v * stride) as u32, c * p));
                    }
                }
            }
            scratch.sort_unstable_by_key(|e| e.0);
            let mut k = 0;
            while k < scratch.len() {
                let col = scratch[k].0;
                let mut sum = 0.0;
                while k < scratch.len() && scratch[k].0 == col {
                    sum += scratch[k].1;
                    k += 1;
                }
                cols.push(col);
                vals.push(sum);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            row_ptr,
            cols,
            vals,
        })
    }
}

/// One step of random-order pseudo-Gibbs sampling:
/// `T(x -> x') = Σ_{i fireable} c_i θ_i(x'_i | y_i) [x'_{-i} = x_{-i}]`,
/// with clamped nodes never fired and weights renormalized over the rest.
pub fn transition_matrix(dn: &DependencyNetwork, clamps: &Clamps) -> Result<TransitionMatrix> {
    check_clamps(dn, clamps)?;
    let weights = dn.weights().restricted(&clamps.free_mask(dn.len()))?;
    TransitionMatrix::build(dn, &weights)
}

/// The matrix that fires node `i` deterministically.
pub fn node_matrix(dn: &DependencyNetwork, i: usize) -> Result<TransitionMatrix> {
    dn.space().check_var(i)?;
    let mut weights = vec![0.0; dn.len()];
    weights[i] = 1.0;
    TransitionMatrix::build(dn, &weights)
}

fn check_clamps(dn: &DependencyNetwork, clamps: &Clamps) -> Result<()> {
    for (v, x) in clamps.iter() {
        dn.space().check_var(v)?;
        if x as usize >= dn.space().card(v) {
            return Err(Error::ValueOutOfRange {
                var: v,
                value: x as usize,
                card: dn.space().card(v),
            });
        }
    }
    Ok(())
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Uniform start over states consistent with the clamps.
fn initial_vector(space: &VarSpace, clamps: &Clamps) -> Vec<f64> {
    let n = space.total_states() as usize;
    let mut state = vec![0; space.len()];
    let mut v: Vec<f64> = (0..n)
        .map(|x| {
            space.decode_into(x as u64, &mut state);
            if clamps.matches(&state) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    normalize(&mut v);
    v
}

/// Power iteration `v <- step(v)` until the L1 change drops below
/// [`STATIONARY_TOLERANCE`].
fn power_iterate(mut v: Vec<f64>, mut step: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Vec<f64>> {
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_POWER_ITERATIONS {
        let mut next = step(&v);
        normalize(&mut next);
        residual = l1(&next, &v);
        v = next;
        if residual < STATIONARY_TOLERANCE {
            return Ok(v);
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_POWER_ITERATIONS,
        residual,
    })
}

/// Stationary distribution of random-order (clamped) pseudo-Gibbs sampling,
/// as the left fixed vector of [`transition_matrix`].
pub fn stationary_exact(dn: &DependencyNetwork, clamps: &Clamps) -> Result<JointTable> {
    let t = transition_matrix(dn, clamps)?;
    let v = power_iterate(initial_vector(dn.space(), clamps), |v| t.left_apply(v))?;
    JointTable::from_weights(dn.space().clone(), v)
}

/// Per-phase stationary distributions `π_0 .. π_{n-1}` of ordered sampling
/// with firing order `0, 1, .., n-1`. `π_i` is the distribution of the state
/// just before node `i` fires, i.e. the fixed vector of firing
/// `i, i+1, .., n-1, 0, .., i-1` in turn.
pub fn ordered_phase_distributions(dn: &DependencyNetwork) -> Result<Vec<JointTable>> {
    let n = dn.len();
    let mats = (0..n)
        .map(|i| node_matrix(dn, i))
        .collect::<Result<Vec<_>>>()?;
    let start = initial_vector(dn.space(), &Clamps::none());
    (0..n)
        .map(|phase| {
            let v = power_iterate(start.clone(), |v| {
                let mut cur = v.to_vec();
                for k in 0..n {
                    cur = mats[(phase + k) % n].left_apply(&cur);
                }
                cur
            })?;
            JointTable::from_weights(dn.space().clone(), v)
        })
        .collect()
}

/// Long-run distribution of ordered pseudo-Gibbs output: the average of the
/// per-phase stationary distributions.
pub fn stationary_ordered_exact(dn: &DependencyNetwork) -> Result<JointTable> {
    let phases = ordered_phase_distributions(dn)?;
    let n = phases.len() as f64;
    let mut avg = vec![0.0; phases[0].probs().len()];
    for p in &phases {
        for (a, b) in avg.iter_mut().zip(p.probs()) {
            *a += b / n;
        }
    }
    JointTable::from_weights(dn.space().clone(), avg)
}

/// L1 residual of `π(x) = Σ_i c_i π(x_{-i}) θ_i(x_i | y_i)`.
pub fn fixed_point_residual(pi: &JointTable, dn: &DependencyNetwork) -> Result<f64> {
    if pi.space() != dn.space() {
        return Err(Error::SpaceMismatch);
    }
    let mut mix = vec![0.0; pi.probs().len()];
    for (i, cpt) in dn.cpts().iter().enumerate() {
        let c = dn.weights().get(i);
        if c == 0.0 {
            continue;
        }
        let q = super::m_project(pi, cpt)?;
        for (m, p) in mix.iter_mut().zip(q.probs()) {
            *m += c * p;
        }
    }
    Ok(l1(&mix, pi.probs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpt::Cpt;

    fn coin(p1: f64) -> DependencyNetwork {
        let s = VarSpace::binary(1).unwrap();
        let c = Cpt::unconditional(&s, 0, vec![1.0 - p1, p1]).unwrap();
        DependencyNetwork::with_uniform_weights(s, vec![c]).unwrap()
    }

    fn incompatible_pair() -> DependencyNetwork {
        let s = VarSpace::binary(2).unwrap();
        let c0 = Cpt::new(
            &s,
            0,
            vec![1],
            vec![Some(vec![0.9, 0.1]), Some(vec![0.3, 0.7])],
        )
        .unwrap();
        let c1 = Cpt::new(
            &s,
            1,
            vec![0],
            vec![Some(vec![0.2, 0.8]), Some(vec![0.6, 0.4])],
        )
        .unwrap();
        DependencyNetwork::with_uniform_weights(s, vec![c0, c1]).unwrap()
    }

    #[test]
    fn single_node_matrix() {
        let t = transition_matrix(&coin(0.3), &Clamps::none()).unwrap();
        let d = t.to_dense();
        for row in d {
            assert!((row[0] - 0.7).abs() < 1e-15 && (row[1] - 0.3).abs() < 1e-15);
        }
        let pi = stationary_exact(&coin(0.3), &Clamps::none()).unwrap();
        assert!((pi.probs()[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn rows_are_stochastic() {
        let t = transition_matrix(&incompatible_pair(), &Clamps::none()).unwrap();
        for x in 0..t.n_states() {
            let s: f64 = t.row(x).map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn all_clamped_fails() {
        let dn = coin(0.5);
        let clamps = Clamps::new(dn.space(), vec![(0, 1)]).unwrap();
        assert_eq!(transition_matrix(&dn, &clamps), Err(Error::AllClamped));
    }

    #[test]
    fn stationary_satisfies_fixed_point() {
        let dn = incompatible_pair();
        let pi = stationary_exact(&dn, &Clamps::none()).unwrap();
        assert!(fixed_point_residual(&pi, &dn).unwrap() < 1e-10);
    }

    #[test]
    fn clamped_chain_stays_on_evidence() {
        let dn = incompatible_pair();
        let clamps = Clamps::new(dn.space(), vec![(1, 1)]).unwrap();
        let pi = stationary_exact(&dn, &clamps).unwrap();
        // only node 0 fires, so π(x0 | x1=1) = θ_0(. | 1)
        assert!((pi.probs()[1] - 0.3).abs() < 1e-12);
        assert!((pi.probs()[3] - 0.7).abs() < 1e-12);
        assert_eq!(pi.probs()[0], 0.0);
    }

    #[test]
    fn ordered_single_node_matches_random() {
        let dn = coin(0.3);
        let a = stationary_ordered_exact(&dn).unwrap();
        let b = stationary_exact(&dn, &Clamps::none()).unwrap();
        assert!(crate::discrete::total_variation(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn phases_advance_by_firing() {
        let dn = incompatible_pair();
        let phases = ordered_phase_distributions(&dn).unwrap();
        let next = node_matrix(&dn, 0).unwrap().left_apply(phases[0].probs());
        assert!(l1(&next, phases[1].probs()) < 1e-10);
    }

    #[test]
    fn guard_on_state_count() {
        let s = VarSpace::binary(17).unwrap();
        let cpts = (0..17)
            .map(|i| Cpt::unconditional(&s, i, vec![0.5, 0.5]).unwrap())
            .collect();
        let dn = DependencyNetwork::with_uniform_weights(s, cpts).unwrap();
        assert!(matches!(
            transition_matrix(&dn, &Clamps::none()),
            Err(Error::TooLarge { .. })
        ));
    }
}
