//! Local structure and parameter learning for dependency networks.
//!
//! Each node independently picks inputs `Y_i` minimizing
//! `scost_i(Y_i) = H(X_i | Y_i) + R_i(Y_i, N)` under the empirical
//! distribution, by greedy single-add/single-remove search, and then sets
//! its CPT to the empirical conditional `N_{x y} / N_y`.

use super::network::DependencyNetwork;
use crate::cpt::{Cpt, SelectionWeights};
use crate::discrete::{Dataset, VarSpace, MAX_DENSE_STATES};
use crate::error::{Error, Result};

/// Relative slack under which two structure scores count as equal.
pub const SCORE_EPS: f64 = 1e-12;

/// `a` improves on `b` by more than the tie tolerance.
#[inline]
pub fn strictly_better(a: f64, b: f64) -> bool {
    a < b - SCORE_EPS * b.abs().max(1.0)
}

/// Structure regularizer `R_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PenaltySpec {
    /// `k / N`
    Aic,
    /// `k ln N / (2N)`
    #[default]
    Mdl,
    None,
}

impl std::str::FromStr for PenaltySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Self::Aic),
            "mdl" => Ok(Self::Mdl),
            "none" => Ok(Self::None),
            other => Err(Error::InvalidConfig(format!("unknown penalty {other:?}"))),
        }
    }
}

/// `R_i` for a child with `child_card` values whose inputs take
/// `input_configs` joint values (1 for no inputs), with `k = (|X_i|-1)|Y_i|`.
pub fn penalty(pen: PenaltySpec, child_card: usize, input_configs: u64, n: usize) -> f64 {
    let k = (child_card as f64 - 1.0) * input_configs as f64;
    let n = n as f64;
    match pen {
        PenaltySpec::Aic => k / n,
        PenaltySpec::Mdl => k / (2.0 * n) * n.ln(),
        PenaltySpec::None => 0.0,
    }
}

/// Counts `N_{x_i y_i}` for one node and input set. Only input rows that
/// occur in the data are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    pub child: usize,
    pub inputs: Vec<usize>,
    pub child_card: usize,
    /// `|Y_i|`, the number of input configurations.
    pub input_configs: u64,
    /// N
    pub n: u64,
    /// Observed input rows, ascending.
    pub rows: Vec<u64>,
    /// `counts[k * child_card + x]` is `N_{x, rows[k]}`.
    pub counts: Vec<u64>,
}

impl SuffStats {
    pub fn collect(d: &Dataset, child: usize, inputs: &[usize]) -> Result<Self> {
        let space = d.space();
        space.check_var(child)?;
        for &v in inputs {
            space.check_var(v)?;
        }
        let card = space.card(child);
        let input_configs = space.configs(inputs);
        let n = d.len();
        let cards: Vec<u64> = inputs.iter().map(|&v| space.card(v) as u64).collect();
        let key = |row: &[u16]| -> u64 {
            inputs
                .iter()
                .zip(&cards)
                .fold(0u64, |acc, (&v, &c)| acc * c + row[v] as u64)
        };

        let dense_cells = input_configs.saturating_mul(card as u64);
        let (rows, counts) = if dense_cells <= (4 * n as u64).max(1 << 16) {
            let mut cells = vec![0u64; dense_cells as usize];
            for row in d.rows() {
                cells[key(row) as usize * card + row[child] as usize] += 1;
            }
            let mut rows = Vec::new();
            let mut counts = Vec::new();
            for (y, chunk) in cells.chunks_exact(card).enumerate() {
                if chunk.iter().any(|&c| c > 0) {
                    rows.push(y as u64);
                    counts.extend_from_slice(chunk);
                }
            }
            (rows, counts)
        } else {
            let mut keys: Vec<(u64, u16)> = d.rows().map(|r| (key(r), r[child])).collect();
            keys.sort_unstable();
            let mut rows: Vec<u64> = Vec::new();
            let mut counts: Vec<u64> = Vec::new();
            for (y, x) in keys {
                if rows.last() != Some(&y) {
                    rows.push(y);
                    counts.extend(std::iter::repeat_n(0, card));
                }
                let base = counts.len() - card;
                counts[base + x as usize] += 1;
            }
            (rows, counts)
        };
        Ok(Self {
            child,
            inputs: inputs.to_vec(),
            child_card: card,
            input_configs,
            n: n as u64,
            rows,
            counts,
        })
    }

    /// `H(X_i | Y_i)` of the empirical distribution, in nats.
    pub fn conditional_entropy(&self) -> f64 {
        let n = self.n as f64;
        let mut h = 0.0;
        for chunk in self.counts.chunks_exact(self.child_card) {
            let ny: u64 = chunk.iter().sum();
            let ny = ny as f64;
            for &c in chunk {
                if c > 0 {
                    let c = c as f64;
                    h -= c / n * (c / ny).ln();
                }
            }
        }
        h
    }
}

/// CPT from counts. With `positivity`, every zero count (including whole
/// unseen rows) is raised to one before normalizing; without it, unseen
/// rows are left undefined.
pub fn learn_parameters(
    d: &Dataset,
    child: usize,
    inputs: &[usize],
    positivity: bool,
) -> Result<Cpt> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if inputs.contains(&child) {
        return Err(Error::InvalidCpt {
            node: child,
            reason: "child listed among its own inputs".into(),
        });
    }
    let stats = SuffStats::collect(d, child, inputs)?;
    cpt_from_stats(d.space(), &stats, positivity)
}

pub(crate) fn cpt_from_stats(space: &VarSpace, stats: &SuffStats, positivity: bool) -> Result<Cpt> {
    let card = stats.child_card;
    if stats.input_configs.saturating_mul(card as u64) > MAX_DENSE_STATES {
        return Err(Error::TooLarge {
            states: stats.input_configs.saturating_mul(card as u64),
            limit: MAX_DENSE_STATES,
        });
    }
    let n_rows = stats.input_configs as usize;
    let unseen = positivity.then(|| vec![1.0 / card as f64; card]);
    let mut rows: Vec<Option<Vec<f64>>> = vec![unseen; n_rows];
    for (k, &y) in stats.rows.iter().enumerate() {
        let chunk = &stats.counts[k * card..(k + 1) * card];
        let adjusted: Vec<f64> = chunk
            .iter()
            .map(|&c| if positivity && c == 0 { 1.0 } else { c as f64 })
            .collect();
        let total: f64 = adjusted.iter().sum();
        rows[y as usize] = Some(adjusted.iter().map(|c| c / total).collect());
    }
    Cpt::new(space, stats.child, stats.inputs.clone(), rows)
}

/// `scost_i(Y_i) = H(X_i | Y_i) + R_i`, on raw (unsmoothed) counts.
pub fn scost(d: &Dataset, child: usize, inputs: &[usize], pen: PenaltySpec) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let stats = SuffStats::collect(d, child, inputs)?;
    Ok(score_of(&stats, pen))
}

fn score_of(stats: &SuffStats, pen: PenaltySpec) -> f64 {
    stats.conditional_entropy()
        + penalty(pen, stats.child_card, stats.input_configs, stats.n as usize)
}

/// Outcome of the greedy input search for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSearch {
    /// Selected inputs, ascending.
    pub inputs: Vec<usize>,
    /// Candidate evaluations performed (the baseline `scost(∅)` and the
    /// optional guard evaluation are not counted).
    pub evaluations: u64,
    /// Accepted scores, starting with `scost(∅)`.
    pub trajectory: Vec<f64>,
    /// Final score of `inputs`.
    pub score: f64,
    /// The guard step replaced the greedy result with `X_{-i}`.
    pub guard_applied: bool,
}

/// Greedy structure search for node `child`.
///
/// Starts from no inputs; each round scores every single-variable addition
/// and removal and moves to the best one if it strictly lowers the score.
/// Ties prefer additions, then the lowest variable id. With `guard`, the
/// result is replaced by all other variables whenever those score lower.
pub fn learn_structure_node(
    d: &Dataset,
    child: usize,
    pen: PenaltySpec,
    guard: bool,
) -> Result<NodeSearch> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let space = d.space();
    space.check_var(child)?;
    let n = space.len();

    let mut inputs: Vec<usize> = Vec::new();
    let mut current = score_of(&SuffStats::collect(d, child, &inputs)?, pen);
    let mut trajectory = vec![current];
    let mut evaluations = 0u64;

    loop {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let adds = (0..n).filter(|&j| j != child && !inputs.contains(&j));
        let removes = inputs.clone();
        let candidates = adds
            .map(|j| {
                let mut c = inputs.clone();
                let at = c.partition_point(|&v| v < j);
                c.insert(at, j);
                c
            })
            .chain(removes.into_iter().map(|j| {
                inputs
                    .iter()
                    .copied()
                    .filter(|&v| v != j)
                    .collect::<Vec<_>>()
            }));
        for cand in candidates {
            let s = score_of(&SuffStats::collect(d, child, &cand)?, pen);
            evaluations += 1;
            if best.as_ref().is_none_or(|(b, _)| strictly_better(s, *b)) {
                best = Some((s, cand));
            }
        }
        match best {
            Some((s, cand)) if strictly_better(s, current) => {
                inputs = cand;
                current = s;
                trajectory.push(s);
            }
            _ => break,
        }
    }

    let mut guard_applied = false;
    if guard {
        let all: Vec<usize> = (0..n).filter(|&j| j != child).collect();
        let s_all = score_of(&SuffStats::collect(d, child, &all)?, pen);
        if current > s_all {
            inputs = all;
            current = s_all;
            guard_applied = true;
        }
    }

    Ok(NodeSearch {
        inputs,
        evaluations,
        trajectory,
        score: current,
        guard_applied,
    })
}

/// Settings for [`learn`].
#[derive(Debug, Clone, PartialEq)]
pub struct LearnOptions {
    pub penalty: PenaltySpec,
    pub positivity: bool,
    /// Apply the final "all inputs if cheaper" step.
    pub guard: bool,
    /// Selection weights of the result; uniform when `None`.
    pub weights: Option<SelectionWeights>,
}

impl Default for LearnOptions {
    fn default() -> Self {
        Self {
            penalty: PenaltySpec::Mdl,
            positivity: true,
            guard: false,
            weights: None,
        }
    }
}

/// A learned network together with its per-node search records.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedNetwork {
    pub network: DependencyNetwork,
    pub searches: Vec<NodeSearch>,
}

impl LearnedNetwork {
    /// Total structure-cost evaluations over all nodes.
    pub fn evaluations(&self) -> u64 {
        self.searches.iter().map(|s| s.evaluations).sum()
    }
}

/// Learns every node independently: inputs by [`learn_structure_node`],
/// then the CPT by [`learn_parameters`].
pub fn learn(d: &Dataset, opts: &LearnOptions) -> Result<LearnedNetwork> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let space = d.space().clone();
    let mut cpts = Vec::with_capacity(space.len());
    let mut searches = Vec::with_capacity(space.len());
    for i in 0..space.len() {
        let search = learn_structure_node(d, i, opts.penalty, opts.guard)?;
        cpts.push(learn_parameters(d, i, &search.inputs, opts.positivity)?);
        searches.push(search);
    }
    let weights = opts
        .weights
        .clone()
        .unwrap_or_else(|| SelectionWeights::uniform(space.len()));
    Ok(LearnedNetwork {
        network: DependencyNetwork::new(space, cpts, weights)?,
        searches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(rows: &[[u16; 2]]) -> Dataset {
        Dataset::from_rows(VarSpace::binary(2).unwrap(), rows).unwrap()
    }

    #[test]
    fn penalty_values() {
        let mdl = penalty(PenaltySpec::Mdl, 2, 1, 8);
        assert!((mdl - 0.129965).abs() < 1e-6);
        let aic = penalty(PenaltySpec::Aic, 2, 2, 1000);
        assert!((aic - 0.002).abs() < 1e-15);
        assert_eq!(penalty(PenaltySpec::None, 5, 64, 3), 0.0);
    }

    #[test]
    fn penalty_parses() {
        assert_eq!("MDL".parse::<PenaltySpec>().unwrap(), PenaltySpec::Mdl);
        assert_eq!("aic".parse::<PenaltySpec>().unwrap(), PenaltySpec::Aic);
        assert!("bic".parse::<PenaltySpec>().is_err());
    }

    #[test]
    fn positivity_trick_rows() {
        // counts (0, 7) for x1 = 1 and (5, 3) for x1 = 0
        let mut rows = vec![[1u16, 1u16]; 7];
        rows.extend(std::iter::repeat_n([0, 0], 5));
        rows.extend(std::iter::repeat_n([1, 0], 3));
        let d = binary(&rows);
        let cpt = learn_parameters(&d, 0, &[1], true).unwrap();
        assert_eq!(cpt.row(1).unwrap(), &[1.0 / 8.0, 7.0 / 8.0]);
        assert_eq!(cpt.row(0).unwrap(), &[0.625, 0.375]);
        let raw = learn_parameters(&d, 0, &[1], false).unwrap();
        assert_eq!(raw.row(1).unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn unseen_rows() {
        let d = binary(&[[0, 0], [1, 0]]);
        let smooth = learn_parameters(&d, 0, &[1], true).unwrap();
        assert_eq!(smooth.row(1).unwrap(), &[0.5, 0.5]);
        let raw = learn_parameters(&d, 0, &[1], false).unwrap();
        assert_eq!(raw.row(1), Err(Error::UndefinedRow { node: 0, row: 1 }));
    }

    #[test]
    fn scost_examples() {
        let mut rows = vec![[0u16, 0u16]; 5];
        rows.extend(std::iter::repeat_n([1, 1], 3));
        let d = binary(&rows);
        let s = scost(&d, 0, &[], PenaltySpec::Mdl).unwrap();
        assert!((s - 0.791528).abs() < 1e-6);
        // X0 is a copy of X1
        assert_eq!(scost(&d, 0, &[1], PenaltySpec::None).unwrap(), 0.0);
        let h = scost(&d, 0, &[], PenaltySpec::None).unwrap();
        assert!((h - 0.661563).abs() < 1e-6);
    }

    #[test]
    fn sparse_and_dense_counts_agree() {
        let space = VarSpace::new(vec![3; 12]).unwrap();
        let mut d = Dataset::new(space);
        for t in 0..50u16 {
            let row: Vec<u16> = (0..12u16).map(|v| (t * 7 + v * v + t / 3) % 3).collect();
            d.push(&row).unwrap();
        }
        let inputs: Vec<usize> = (1..12).collect();
        let sparse = SuffStats::collect(&d, 0, &inputs).unwrap();
        assert!(sparse.input_configs * 3 > 1 << 16);
        assert_eq!(sparse.counts.iter().sum::<u64>(), 50);
        let joint = crate::discrete::empirical_distribution(&d).unwrap();
        for vars in [inputs.clone(), vec![1, 2]] {
            let stats = SuffStats::collect(&d, 0, &vars).unwrap();
            let exact = joint.conditional_entropy(&[0], &vars).unwrap();
            assert!((stats.conditional_entropy() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node_learns_nothing() {
        let d = Dataset::from_rows(VarSpace::binary(1).unwrap(), &[[0u16], [1], [1]]).unwrap();
        let s = learn_structure_node(&d, 0, PenaltySpec::Mdl, false).unwrap();
        assert!(s.inputs.is_empty());
        assert_eq!(s.evaluations, 0);
    }

    #[test]
    fn copy_is_found() {
        let rows: Vec<[u16; 2]> = (0..1000)
            .map(|t| [(t % 2) as u16, (t % 2) as u16])
            .collect();
        let d = binary(&rows);
        let s = learn_structure_node(&d, 0, PenaltySpec::Mdl, false).unwrap();
        assert_eq!(s.inputs, vec![1]);
        // one round of one add, then one round with one remove
        assert_eq!(s.evaluations, 2);
        let net = learn(&d, &LearnOptions::default()).unwrap();
        assert_eq!(net.network.inputs(1), &[0]);
        assert_eq!(
            net.network.cpt(0).row(0).unwrap(),
            &[500.0 / 501.0, 1.0 / 501.0]
        );
        assert_eq!(net.evaluations(), 4);
    }

    #[test]
    fn single_row_dataset() {
        let d = binary(&[[1, 0]]);
        let net = learn(&d, &LearnOptions::default()).unwrap();
        assert!(net.network.inputs(0).is_empty());
        assert!(net.network.inputs(1).is_empty());
        assert_eq!(net.network.cpt(0).row(0).unwrap(), &[0.5, 0.5]);
        assert_eq!(net.network.cpt(1).row(0).unwrap(), &[0.5, 0.5]);
    }

    #[test]
    fn empty_dataset_errors() {
        let d = Dataset::new(VarSpace::binary(2).unwrap());
        assert_eq!(
            learn(&d, &LearnOptions::default()).unwrap_err(),
            Error::EmptyDataset
        );
        assert_eq!(
            scost(&d, 0, &[], PenaltySpec::Mdl).unwrap_err(),
            Error::EmptyDataset
        );
    }
}
