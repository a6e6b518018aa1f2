//! Ground-truth distributions: Ising grids, random Bayesian networks, and
//! i.i.d. sampling from dense tables.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::bayesnet::BayesianNetwork;
use crate::cpt::Cpt;
use crate::depnet::DependencyNetwork;
use crate::discrete::{Dataset, JointTable, Value, VarSpace};
use crate::error::{Error, Result};
use crate::infogeo::cpt_cell_per_state;

/// Binary spins on a `rows x cols` grid with nearest-neighbour coupling.
/// Variable `r * cols + c` is the spin at row `r`, column `c`; value 0 is
/// spin -1 and value 1 is spin +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingSpec {
    pub rows: usize,
    pub cols: usize,
    pub coupling: f64,
    pub field: f64,
}

impl IsingSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            coupling: 0.4,
            field: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    /// Grid edges `(i, j)` with `i < j`, right neighbours before down.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let i = r * self.cols + c;
                if c + 1 < self.cols {
                    e.push((i, i + 1));
                }
                if r + 1 < self.rows {
                    e.push((i, i + self.cols));
                }
            }
        }
        e
    }
}

const ISING_CHUNK: usize = 1 << 14;

/// `p(x) ∝ exp(J Σ_<ij> s_i s_j + h Σ_i s_i)` by full enumeration.
pub fn ising_joint(spec: &IsingSpec) -> Result<JointTable> {
    let n = spec.n();
    if n == 0 || !spec.coupling.is_finite() || !spec.field.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "Ising grid {}x{} with J={} h={}",
            spec.rows, spec.cols, spec.coupling, spec.field
        )));
    }
    let space = VarSpace::binary(n)?;
    let total = space.dense_len()?;
    let edges = spec.edges();
    // shift by the largest possible exponent so every weight is at most 1
    let shift = spec.coupling.abs() * edges.len() as f64 + spec.field.abs() * n as f64;
    // variable 0 is the most significant bit
    let bit = |x: usize, v: usize| -> f64 {
        if (x >> (n - 1 - v)) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    };
    let mut weights = vec![0.0; total];
    weights
        .par_chunks_mut(ISING_CHUNK)
        .enumerate()
        .for_each(|(k, chunk)| {
            for (off, w) in chunk.iter_mut().enumerate() {
                let x = k * ISING_CHUNK + off;
                let pair: f64 = edges.iter().map(|&(i, j)| bit(x, i) * bit(x, j)).sum();
                let single: f64 = (0..n).map(|i| bit(x, i)).sum();
                *w = (spec.coupling * pair + spec.field * single - shift).exp();
            }
        });
    JointTable::from_weights(space, weights)
}

/// Random DAG with CPT rows drawn from a symmetric Dirichlet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomBnSpec {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// Cardinality of every variable.
    pub card: usize,
    /// Dirichlet concentration.
    pub alpha: f64,
}

impl RandomBnSpec {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            seed,
            card: 2,
            alpha: 1.0,
        }
    }
}

/// Draws a random topological order, then `m` distinct forward pairs of it
/// as edges, then every CPT row from Dirichlet(α).
pub fn random_bn(spec: &RandomBnSpec) -> Result<BayesianNetwork> {
    let n = spec.n;
    let pairs = n * n.saturating_sub(1) / 2;
    if spec.m > pairs {
        return Err(Error::InfeasibleEdges {
            nodes: n,
            edges: spec.m,
        });
    }
    if spec.alpha <= 0.0 || !spec.alpha.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "Dirichlet alpha {}",
            spec.alpha
        )));
    }
    let space = VarSpace::new(vec![spec.card; n])?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut parents = vec![Vec::new(); n];
    for k in index::sample(&mut rng, pairs, spec.m).into_vec() {
        let (a, b) = forward_pair(n, k);
        parents[order[b]].push(order[a]);
    }
    let gamma = Gamma::new(spec.alpha, 1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut cpts = Vec::with_capacity(n);
    for (i, ps) in parents.iter_mut().enumerate() {
        ps.sort_unstable();
        let n_rows = space.configs(ps) as usize;
        let rows = (0..n_rows)
            .map(|_| Some(dirichlet_row(&gamma, spec.card, &mut rng)))
            .collect();
        cpts.push(Cpt::new(&space, i, ps.clone(), rows)?);
    }
    BayesianNetwork::new(space, cpts)
}

/// The `k`-th pair `(a, b)`, `a < b`, in row-major order.
fn forward_pair(n: usize, mut k: usize) -> (usize, usize) {
    for a in 0..n {
        let len = n - 1 - a;
        if k < len {
            return (a, a + 1 + k);
        }
        k -= len;
    }
    unreachable!("pair index out of range")
}

fn dirichlet_row<R: Rng>(gamma: &Gamma<f64>, card: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..card).map(|_| gamma.sample(rng)).collect();
        let s: f64 = g.iter().sum();
        if s > 0.0 && s.is_finite() {
            return g.iter().map(|x| x / s).collect();
        }
    }
}

/// Dense product `Π_i θ_i(x_i | pa_i)`.
pub fn bn_joint(bn: &BayesianNetwork) -> Result<JointTable> {
    let space = bn.space();
    let total = space.dense_len()?;
    let mut probs = vec![1.0; total];
    for cpt in bn.cpts() {
        if let Some(row) = (0..cpt.n_rows()).find(|&r| !cpt.is_defined(r)) {
            return Err(Error::UndefinedRow {
                node: cpt.child(),
                row,
            });
        }
        let cells = cpt_cell_per_state(space, cpt);
        let card = cpt.child_card();
        for (p, &cell) in probs.iter_mut().zip(&cells) {
            *p *= cpt.row_unchecked(cell / card)[cell % card];
        }
    }
    JointTable::from_weights(space.clone(), probs)
}

/// `samples` i.i.d. draws by inverse CDF over the state index.
pub fn sample_joint(p: &JointTable, samples: usize, seed: u64) -> Result<Dataset> {
    let space = p.space();
    let mut cum = Vec::with_capacity(p.probs().len());
    let mut acc = 0.0;
    for &x in p.probs() {
        acc += x;
        cum.push(acc);
    }
    let last = p
        .probs()
        .iter()
        .rposition(|&x| x > 0.0)
        .ok_or_else(|| Error::InvalidDistribution("no positive mass".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Dataset::with_capacity(space.clone(), samples);
    let mut state = vec![0 as Value; space.len()];
    for _ in 0..samples {
        let u = rng.random::<f64>() * acc;
        let idx = cum.partition_point(|&c| c <= u).min(last);
        space.decode_into(idx as u64, &mut state);
        out.push_unchecked(&state);
    }
    Ok(out)
}

/// Strictly positive joint table with weights drawn from Dirichlet(1)
/// over the states.
pub fn random_joint<R: Rng + ?Sized>(space: &VarSpace, rng: &mut R) -> Result<JointTable> {
    let len = space.dense_len()?;
    let w = (0..len)
        .map(|_| rand_distr::Exp1.sample(rng))
        .map(|x: f64| x.max(f64::MIN_POSITIVE))
        .collect();
    JointTable::from_weights(space.clone(), w)
}

/// CPT whose entries are drawn i.i.d. from `U(lo, hi)` and normalized per
/// row; strictly positive when `lo > 0`.
pub fn random_cpt<R: Rng + ?Sized>(
    space: &VarSpace,
    child: usize,
    inputs: Vec<usize>,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<Cpt> {
    if !(0.0 <= lo && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!("entry range [{lo}, {hi})")));
    }
    let card = space.card(child);
    let rows = (0..space.configs(&inputs))
        .map(|_| {
            let r: Vec<f64> = (0..card).map(|_| rng.random_range(lo..hi)).collect();
            let s: f64 = r.iter().sum();
            Some(r.into_iter().map(|x| x / s).collect())
        })
        .collect();
    Cpt::new(space, child, inputs, rows)
}

/// Dependency network where each node takes every other variable as an
/// input with probability 1/2 and has [`random_cpt`] entries. Binary
/// variables get rows `(1 - u, u)` with `u ~ U(lo, hi)`.
pub fn random_dn<R: Rng + ?Sized>(
    space: &VarSpace,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<DependencyNetwork> {
    let n = space.len();
    let mut cpts = Vec::with_capacity(n);
    for i in 0..n {
        let inputs: Vec<usize> = (0..n).filter(|&j| j != i && rng.random_bool(0.5)).collect();
        if space.card(i) == 2 {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(Error::InvalidConfig(format!("entry range [{lo}, {hi})")));
            }
            let rows = (0..space.configs(&inputs))
                .map(|_| {
                    let u = rng.random_range(lo..hi);
                    Some(vec![1.0 - u, u])
                })
                .collect();
            cpts.push(Cpt::new(space, i, inputs, rows)?);
        } else {
            cpts.push(random_cpt(space, i, inputs, lo, hi, rng)?);
        }
    }
    DependencyNetwork::with_uniform_weights(space.clone(), cpts)
}
