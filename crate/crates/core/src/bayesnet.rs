//! Bayesian-network baseline: hill-climbing structure search over DAGs and
//! ancestral sampling.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cpt::Cpt;
use crate::depnet::{cpt_from_stats, penalty, strictly_better, PenaltySpec, SuffStats};
use crate::discrete::{Dataset, Value, VarSpace};
use crate::error::{Error, Result};
use crate::gibbs::draw;

/// A DAG over the variables with one CPT per node, inputs equal to its
/// parents in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    space: VarSpace,
    parents: Vec<Vec<usize>>,
    cpts: Vec<Cpt>,
}

impl BayesianNetwork {
    pub fn new(space: VarSpace, cpts: Vec<Cpt>) -> Result<Self> {
        if cpts.len() != space.len() {
            return Err(Error::InvalidConfig(format!(
                "{} tables for {} variables",
                cpts.len(),
                space.len()
            )));
        }
        let mut parents = Vec::with_capacity(cpts.len());
        for (i, cpt) in cpts.iter().enumerate() {
            if cpt.child() != i {
                return Err(Error::InvalidCpt {
                    node: i,
                    reason: format!("table describes variable {}", cpt.child()),
                });
            }
            cpt.check_space(&space)?;
            let mut ps = cpt.inputs().to_vec();
            ps.sort_unstable();
            parents.push(ps);
        }
        topological_order(&parents)?;
        Ok(Self {
            space,
            parents,
            cpts,
        })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn space(&self) -> &VarSpace {
        &self.space
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn parent_sets(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn cpt(&self, i: usize) -> &Cpt {
        &self.cpts[i]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Edges `(from, to)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        edges_of(&self.parents)
    }
}

fn edges_of(parents: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = parents
        .iter()
        .enumerate()
        .flat_map(|(to, ps)| ps.iter().map(move |&from| (from, to)))
        .collect();
    e.sort_unstable();
    e
}

/// Kahn's algorithm, taking the lowest-id ready node first.
pub fn topological_order(parents: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = parents.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for (to, ps) in parents.iter().enumerate() {
        for &from in ps {
            if from >= n {
                return Err(Error::UnknownVariable(from));
            }
            if from == to {
                return Err(Error::Cyclic);
            }
            indegree[to] += 1;
            children[from].push(to);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(Error::Cyclic)
    }
}

fn family_score(d: &Dataset, child: usize, parents: &[usize], pen: PenaltySpec) -> Result<f64> {
    let stats = SuffStats::collect(d, child, parents)?;
    Ok(stats.conditional_entropy()
        + penalty(pen, stats.child_card, stats.input_configs, stats.n as usize))
}

/// `Σ_i H(X_i | Pa_i) + Σ_i R_i` under the empirical distribution of `d`.
/// The structure-independent `-H(X)` term is left out.
pub fn bn_scost(d: &Dataset, parents: &[Vec<usize>], pen: PenaltySpec) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if parents.len() != d.space().len() {
        return Err(Error::SpaceMismatch);
    }
    topological_order(parents)?;
    let mut total = 0.0;
    for (i, ps) in parents.iter().enumerate() {
        total += family_score(d, i, ps, pen)?;
    }
    Ok(total)
}

/// Single-edge moves, listed in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    Add(usize, usize),
    Remove(usize, usize),
    Reverse(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedBn {
    pub network: BayesianNetwork,
    /// Candidate structures scored (acyclic candidates only; the initial
    /// empty graph is not counted).
    pub evaluations: u64,
    /// Accepted moves in order.
    pub moves: Vec<Move>,
    /// Total score after each accepted move, starting with the empty graph.
    pub trajectory: Vec<f64>,
}

/// `to` is reachable from `from` along parent→child edges.
fn reaches(children: &[Vec<usize>], from: usize, to: usize, skip: Option<(usize, usize)>) -> bool {
    let mut seen = vec![false; children.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        for &c in &children[u] {
            if skip == Some((u, c)) || seen[c] {
                continue;
            }
            seen[c] = true;
            stack.push(c);
        }
    }
    false
}

fn with_parent(ps: &[usize], p: usize) -> Vec<usize> {
    let mut out = ps.to_vec();
    let at = out.partition_point(|&v| v < p);
    out.insert(at, p);
    out
}

fn without_parent(ps: &[usize], p: usize) -> Vec<usize> {
    ps.iter().copied().filter(|&v| v != p).collect()
}

/// Score, move and new family scores of a hill-climbing candidate.
type Candidate = (f64, Move, Vec<(usize, f64)>);

/// Hill climbing from the empty graph.
///
/// Every round scores all acyclic single-edge additions, removals and
/// reversals (rescoring only the families a move changes) and applies the
/// best one if it strictly lowers the total. Equal scores prefer add, then
/// remove, then reverse, then the lexicographically smallest edge. CPTs
/// are the empirical conditionals, smoothed as in the dependency-network
/// learner when `positivity` is set.
pub fn learn_bn(d: &Dataset, pen: PenaltySpec, positivity: bool) -> Result<LearnedBn> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = d.space().len();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut family = (0..n)
        .map(|i| family_score(d, i, &[], pen))
        .collect::<Result<Vec<f64>>>()?;
    let mut total: f64 = family.iter().sum();
    let mut trajectory = vec![total];
    let mut moves = Vec::new();
    let mut evaluations = 0u64;

    loop {
        let mut best: Option<Candidate> = None;
        let mut consider = |score: f64, mv: Move, fams: Vec<(usize, f64)>| {
            if best
                .as_ref()
                .is_none_or(|(b, _, _)| strictly_better(score, *b))
            {
                best = Some((score, mv, fams));
            }
        };
        for from in 0..n {
            for to in 0..n {
                if from == to || parents[to].contains(&from) || reaches(&children, to, from, None) {
                    continue;
                }
                let s = family_score(d, to, &with_parent(&parents[to], from), pen)?;
                evaluations += 1;
                consider(total - family[to] + s, Move::Add(from, to), vec![(to, s)]);
            }
        }
        let edges = edges_of(&parents);
        for &(from, to) in &edges {
            let s = family_score(d, to, &without_parent(&parents[to], from), pen)?;
            evaluations += 1;
            consider(
                total - family[to] + s,
                Move::Remove(from, to),
                vec![(to, s)],
            );
        }
        for &(from, to) in &edges {
            if reaches(&children, from, to, Some((from, to))) {
                continue;
            }
            let s_to = family_score(d, to, &without_parent(&parents[to], from), pen)?;
            let s_from = family_score(d, from, &with_parent(&parents[from], to), pen)?;
            evaluations += 1;
            consider(
                total - family[to] - family[from] + s_to + s_from,
                Move::Reverse(from, to),
                vec![(to, s_to), (from, s_from)],
            );
        }

        match best {
            Some((score, mv, fams)) if strictly_better(score, total) => {
                match mv {
                    Move::Add(f, t) => {
                        parents[t] = with_parent(&parents[t], f);
                        children[f].push(t);
                    }
                    Move::Remove(f, t) => {
                        parents[t] = without_parent(&parents[t], f);
                        children[f].retain(|&c| c != t);
                    }
                    Move::Reverse(f, t) => {
                        parents[t] = without_parent(&parents[t], f);
                        children[f].retain(|&c| c != t);
                        parents[f] = with_parent(&parents[f], t);
                        children[t].push(f);
                    }
                }
                for (i, s) in fams {
                    family[i] = s;
                }
                total = score;
                trajectory.push(total);
                moves.push(mv);
            }
            _ => break,
        }
    }

    let cpts = (0..n)
        .map(|i| {
            let stats = SuffStats::collect(d, i, &parents[i])?;
            cpt_from_stats(d.space(), &stats, positivity)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LearnedBn {
        network: BayesianNetwork::new(d.space().clone(), cpts)?,
        evaluations,
        moves,
        trajectory,
    })
}

/// Draws `samples` i.i.d. joint assignments by firing the nodes in
/// topological order.
pub fn ancestral_sample(bn: &BayesianNetwork, samples: usize, seed: u64) -> Result<Dataset> {
    let order = topological_order(&bn.parents)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Dataset::with_capacity(bn.space.clone(), samples);
    let mut state = vec![0 as Value; bn.len()];
    for _ in 0..samples {
        for &i in &order {
            let row = bn.cpts[i].row_for(&state)?;
            state[i] = draw(row, rng.random::<f64>());
        }
        out.push_unchecked(&state);
    }
    Ok(out)
}
