//! Pseudo-Gibbs sampling, free and clamped.
//!
//! A chain state is a full assignment. Firing node `i` redraws `x_i` from
//! `θ_i(· | y_i)`; nodes are chosen either cyclically in id order or i.i.d.
//! from the selection weights. Clamped variables keep their evidence value
//! and are never fired.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cpt::Cpt;
use crate::depnet::DependencyNetwork;
use crate::discrete::{Clamps, Dataset, Value, VarSpace};
use crate::error::{Error, Result};

const NODE_STREAM: u64 = 1;
const VALUE_STREAM: u64 = 2;
const INIT_STREAM: u64 = 3;

/// Node-selection scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Unclamped nodes fired cyclically in id order.
    Ordered,
    /// Node ids drawn i.i.d. from the selection weights.
    #[default]
    Random,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ordered" => Ok(Self::Ordered),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidConfig(format!(
                "unknown sampling mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum InitialState {
    /// Each unclamped variable drawn uniformly from the seed.
    #[default]
    UniformRandom,
    Fixed(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub mode: Mode,
    pub clamps: Clamps,
    /// Number of samples to emit.
    pub samples: usize,
    /// Firings discarded before the first sample.
    pub burn_in: u64,
    /// Firings between consecutive samples, at least 1.
    pub thin: u64,
    pub seed: u64,
    pub initial: InitialState,
}

impl SamplerConfig {
    /// Random mode without evidence and with `b = k = n`.
    pub fn new(n: usize, samples: usize, seed: u64) -> Self {
        Self {
            mode: Mode::Random,
            clamps: Clamps::none(),
            samples,
            burn_in: n as u64,
            thin: n as u64,
            seed,
            initial: InitialState::UniformRandom,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_clamps(mut self, clamps: Clamps) -> Self {
        self.clamps = clamps;
        self
    }

    pub fn with_schedule(mut self, burn_in: u64, thin: u64) -> Self {
        self.burn_in = burn_in;
        self.thin = thin;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub outputs: Dataset,
    /// Total firings, `b + N k`.
    pub steps_taken: u64,
    pub config: SamplerConfig,
}

/// Redraws `state[θ.child()]` from its row by inverse CDF in value order.
pub fn fire_node<R: Rng + ?Sized>(state: &mut [Value], theta: &Cpt, rng: &mut R) -> Result<()> {
    let row = theta.row_for(state)?;
    state[theta.child()] = draw(row, rng.random::<f64>());
    Ok(())
}

/// Inverse CDF of `row` at `u ∈ [0, 1)`. Roundoff past the last cumulative
/// value falls back to the last value with positive mass.
#[inline]
pub(crate) fn draw(row: &[f64], u: f64) -> Value {
    let mut acc = 0.0;
    for (v, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return v as Value;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0) as Value
}

fn initial_state(space: &VarSpace, cfg: &SamplerConfig) -> Result<Vec<Value>> {
    let mut state = match &cfg.initial {
        InitialState::Fixed(v) => {
            space.check_values(v)?;
            v.clone()
        }
        InitialState::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(INIT_STREAM);
            space
                .cards()
                .iter()
                .map(|&c| rng.random_range(0..c) as Value)
                .collect()
        }
    };
    cfg.clamps.apply(&mut state);
    Ok(state)
}

#[allow(clippy::large_enum_variant)]
enum Selector {
    Cycle {
        ids: Vec<usize>,
        next: usize,
    },
    Weighted {
        ids: Vec<usize>,
        dist: WeightedIndex<f64>,
        rng: ChaCha8Rng,
    },
}

impl Selector {
    fn new(dn: &DependencyNetwork, cfg: &SamplerConfig) -> Result<Self> {
        let free = cfg.clamps.free_mask(dn.len());
        let ids: Vec<usize> = (0..dn.len()).filter(|&i| free[i]).collect();
        if ids.is_empty() {
            return Err(Error::AllClamped);
        }
        Ok(match cfg.mode {
            Mode::Ordered => Selector::Cycle { ids, next: 0 },
            Mode::Random => {
                let w = dn.weights().restricted(&free)?;
                let dist = WeightedIndex::new(ids.iter().map(|&i| w[i]))
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(NODE_STREAM);
                Selector::Weighted { ids, dist, rng }
            }
        })
    }

    #[inline]
    fn next(&mut self) -> usize {
        match self {
            Selector::Cycle { ids, next } => {
                let i = ids[*next];
                *next = (*next + 1) % ids.len();
                i
            }
            Selector::Weighted { ids, dist, rng } => ids[dist.sample(rng)],
        }
    }
}

fn validate(dn: &DependencyNetwork, cfg: &SamplerConfig) -> Result<()> {
    if cfg.thin == 0 {
        return Err(Error::InvalidConfig(
            "thinning interval must be at least 1".into(),
        ));
    }
    for (v, x) in cfg.clamps.iter() {
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

/// Runs one chain: `b` burn-in firings, then `N` times (record the state,
/// fire `k` nodes).
pub fn run(dn: &DependencyNetwork, cfg: &SamplerConfig) -> Result<SampleRun> {
    validate(dn, cfg)?;
    let mut selector = Selector::new(dn, cfg)?;
    let mut state = initial_state(dn.space(), cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(VALUE_STREAM);
    let cpts = dn.cpts();

    let mut fire = |state: &mut [Value]| -> Result<()> {
        let i = selector.next();
        fire_node(state, &cpts[i], &mut rng)
    };
    for _ in 0..cfg.burn_in {
        fire(&mut state)?;
    }
    let mut outputs = Dataset::with_capacity(dn.space().clone(), cfg.samples);
    for _ in 0..cfg.samples {
        outputs.push_unchecked(&state);
        for _ in 0..cfg.thin {
            fire(&mut state)?;
        }
    }
    Ok(SampleRun {
        outputs,
        steps_taken: cfg.burn_in + cfg.samples as u64 * cfg.thin,
        config: cfg.clone(),
    })
}

/// Clamped-sampling estimate of `p(U | V = v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub query: Vec<usize>,
    /// Space of the query variables, in the order given.
    pub query_space: VarSpace,
    /// `N_u / N`, indexed in mixed radix over `query_space`.
    pub estimate: Vec<f64>,
    pub run: SampleRun,
}

/// Samples with `cfg.clamps` as evidence and tabulates the query variables.
pub fn infer(dn: &DependencyNetwork, query: &[usize], cfg: &SamplerConfig) -> Result<Inference> {
    crate::discrete::check_subset(dn.space(), query)?;
    if let Some(v) = query.iter().find(|&&v| cfg.clamps.value_of(v).is_some()) {
        return Err(Error::Overlap(*v));
    }
    if cfg.samples == 0 {
        return Err(Error::InvalidConfig(
            "inference needs at least one sample".into(),
        ));
    }
    let run = run(dn, cfg)?;
    let query_space = dn.space().subspace(query)?;
    let mut counts = vec![0u64; query_space.dense_len()?];
    for row in run.outputs.rows() {
        counts[dn.space().sub_index(query, row)] += 1;
    }
    let n = run.outputs.len() as f64;
    Ok(Inference {
        query: query.to_vec(),
        query_space,
        estimate: counts.iter().map(|&c| c as f64 / n).collect(),
        run,
    })
}
