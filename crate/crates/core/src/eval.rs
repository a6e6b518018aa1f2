//! Experiment pipelines: output-vs-truth divergences, per-node manifold
//! distances, DN-vs-BN comparisons and randomized theorem checks.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bayesnet::{ancestral_sample, learn_bn};
use crate::cpt::Cpt;
use crate::depnet::{learn, DependencyNetwork, LearnOptions, PenaltySpec};
use crate::discrete::{empirical_distribution, Dataset, JointTable, VarSpace};
use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::gibbs::{self, SamplerConfig};
use crate::infogeo::{
    conditional_residual, e_geodesic_point, fixed_point_residual, kl_to_manifold, m_geodesic_point,
    m_project, stationary_exact, theorem3_slack,
};
use crate::synth::{bn_joint, ising_joint, random_bn, random_dn, random_joint, sample_joint};
use crate::synth::{IsingSpec, RandomBnSpec};

/// Significant digits of report numbers.
const REPORT_DIGITS: usize = 6;

fn num(x: f64) -> String {
    fmt_sig(x, REPORT_DIGITS)
}

/// `KL(empirical(outputs) || p_true)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputKl {
    /// `+inf` when some output state has zero true probability.
    pub kl: f64,
    /// Set when the outputs leave the support of `p_true`.
    pub warning: Option<String>,
}

/// Sums over the observed states only, so the empirical table is never
/// materialized.
pub fn eval_output(outputs: &Dataset, p_true: &JointTable) -> Result<OutputKl> {
    if outputs.space() != p_true.space() {
        return Err(Error::SpaceMismatch);
    }
    if outputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = outputs.len() as f64;
    let mut kl = 0.0;
    let mut outside = 0u64;
    for (idx, count) in outputs.state_counts() {
        let q = p_true.probs()[idx as usize];
        let p = count as f64 / n;
        if q > 0.0 {
            kl += p * (p / q).ln();
        } else {
            outside += count;
        }
    }
    if outside > 0 {
        return Ok(OutputKl {
            kl: f64::INFINITY,
            warning: Some(format!(
                "{outside} of {} output rows have zero true probability",
                outputs.len()
            )),
        });
    }
    Ok(OutputKl {
        kl: kl.max(0.0),
        warning: None,
    })
}

/// Learning diagnostics of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRow {
    pub node: usize,
    pub inputs: Vec<usize>,
    /// `H(X_i)` under the training distribution.
    pub entropy: f64,
    /// `H(X_i | Y_i)` under the training distribution.
    pub cond_entropy: f64,
    /// `KL(p̃* || E(θ_i))`
    pub kl_empirical: f64,
    /// `KL(p* || E(θ_i))`
    pub kl_true: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub rows: Vec<NodeRow>,
    /// `Σ_i c_i KL(p̃* || E(θ_i))`
    pub avg_kl_empirical: f64,
    /// `Σ_i c_i KL(p* || E(θ_i))`
    pub avg_kl_true: f64,
}

pub fn node_table(
    dn: &DependencyNetwork,
    p_empirical: &JointTable,
    p_true: &JointTable,
) -> Result<NodeTable> {
    if p_empirical.space() != dn.space() || p_true.space() != dn.space() {
        return Err(Error::SpaceMismatch);
    }
    let mut rows = Vec::with_capacity(dn.len());
    let (mut avg_e, mut avg_t) = (0.0, 0.0);
    for (i, cpt) in dn.cpts().iter().enumerate() {
        let row = NodeRow {
            node: i,
            inputs: cpt.inputs().to_vec(),
            entropy: p_empirical.entropy(&[i])?,
            cond_entropy: p_empirical.conditional_entropy(&[i], cpt.inputs())?,
            kl_empirical: kl_to_manifold(p_empirical, cpt)?,
            kl_true: kl_to_manifold(p_true, cpt)?,
        };
        let c = dn.weights().get(i);
        avg_e += c * row.kl_empirical;
        avg_t += c * row.kl_true;
        rows.push(row);
    }
    Ok(NodeTable {
        rows,
        avg_kl_empirical: avg_e,
        avg_kl_true: avg_t,
    })
}

impl NodeTable {
    /// One row per node, then an `avg` row with the weighted averages.
    pub fn tsv(&self) -> String {
        let mut out = String::from("node\tinputs\tH\tH_cond\tkl_empirical\tkl_true\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.node,
                inputs_field(&r.inputs),
                num(r.entropy),
                num(r.cond_entropy),
                num(r.kl_empirical),
                num(r.kl_true)
            );
        }
        let _ = writeln!(
            out,
            "avg\t-\t-\t-\t{}\t{}",
            num(self.avg_kl_empirical),
            num(self.avg_kl_true)
        );
        out
    }
}

fn inputs_field(inputs: &[usize]) -> String {
    if inputs.is_empty() {
        return "-".into();
    }
    inputs
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// A named ground truth and the training sizes to draw from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: String,
    pub truth: JointTable,
    /// Nested training-set sizes, ascending.
    pub sizes: Vec<usize>,
}

/// Generator seed of the random-BN benchmarks.
pub const BENCH_BN_SEED: u64 = 1;

/// BN12-20 and Ising4x4 (BN20-37 and Ising5x5 when `full`), each at
/// N = 10^3 and 10^5.
pub fn default_benchmarks(full: bool) -> Result<Vec<Benchmark>> {
    let (bn_n, bn_m, side) = if full { (20, 37, 5) } else { (12, 20, 4) };
    let bn = random_bn(&RandomBnSpec::new(bn_n, bn_m, BENCH_BN_SEED))?;
    let sizes = vec![1_000, 100_000];
    Ok(vec![
        Benchmark {
            name: format!("BN{bn_n}-{bn_m}"),
            truth: bn_joint(&bn)?,
            sizes: sizes.clone(),
        },
        Benchmark {
            name: format!("Ising{side}x{side}"),
            truth: ising_joint(&IsingSpec::new(side, side))?,
            sizes,
        },
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSettings {
    /// Dependency-network learner settings.
    pub dn: LearnOptions,
    pub bn_penalty: PenaltySpec,
    pub bn_positivity: bool,
    /// Output samples drawn from each learned model.
    pub n_out: usize,
    pub seeds: Vec<u64>,
    /// Learning repetitions whose median time is reported.
    pub timing_runs: usize,
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            dn: LearnOptions::default(),
            bn_penalty: PenaltySpec::Mdl,
            bn_positivity: true,
            n_out: 1_000_000,
            seeds: vec![1, 2, 3],
            timing_runs: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum System {
    Dn,
    Bn,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Dn => "DN",
            System::Bn => "BN",
        }
    }
}

/// One (dataset, size, seed, system) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub dataset: String,
    pub n: usize,
    pub n_train: usize,
    pub seed: u64,
    pub system: System,
    /// `KL(p̃* || p*)` of the training data.
    pub kl_train: f64,
    /// `KL(π̃ || p*)` of the model's output data.
    pub kl_out: f64,
    pub evaluations: u64,
    /// Median learning wall time.
    pub time_ms: f64,
}

/// Node diagnostics of the dependency network learned in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCell {
    pub dataset: String,
    pub n_train: usize,
    pub seed: u64,
    pub table: NodeTable,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub runs: Vec<RunRow>,
    pub nodes: Vec<NodeCell>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// KL columns and evaluation counts; bit-identical across reruns.
    pub fn runs_tsv(&self) -> String {
        let mut out = String::from("dataset\tn\tN\tseed\tsystem\tkl_train\tkl_out\tevals\n");
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.dataset,
                r.n,
                r.n_train,
                r.seed,
                r.system.name(),
                num(r.kl_train),
                num(r.kl_out),
                r.evaluations
            );
        }
        out
    }

    /// Median learning times in milliseconds.
    pub fn timings_tsv(&self) -> String {
        let mut out = String::from("dataset\tn\tN\tseed\tsystem\tevals\ttime_ms\n");
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.dataset,
                r.n,
                r.n_train,
                r.seed,
                r.system.name(),
                r.evaluations,
                num(r.time_ms)
            );
        }
        out
    }

    /// Per-node rows followed by one `avg` row per cell.
    pub fn nodes_tsv(&self) -> String {
        let mut out =
            String::from("dataset\tN\tseed\tnode\tinputs\tH\tH_cond\tkl_empirical\tkl_true\n");
        for cell in &self.nodes {
            for r in &cell.table.rows {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    cell.dataset,
                    cell.n_train,
                    cell.seed,
                    r.node,
                    inputs_field(&r.inputs),
                    num(r.entropy),
                    num(r.cond_entropy),
                    num(r.kl_empirical),
                    num(r.kl_true)
                );
            }
            let _ = writeln!(
                out,
                "{}\t{}\t{}\tavg\t-\t-\t-\t{}\t{}",
                cell.dataset,
                cell.n_train,
                cell.seed,
                num(cell.table.avg_kl_empirical),
                num(cell.table.avg_kl_true)
            );
        }
        out
    }
}

/// SplitMix64 of `seed` mixed with a stream tag.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TRAIN_STREAM: u64 = 1;
const DN_OUT_STREAM: u64 = 2;
const BN_OUT_STREAM: u64 = 3;

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// Runs `f` `runs` times; returns the first result and the median time.
fn timed<T>(runs: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut times = Vec::with_capacity(runs.max(1));
    let mut first = None;
    for _ in 0..runs.max(1) {
        let start = Instant::now();
        let out = f()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        first.get_or_insert(out);
    }
    Ok((first.expect("at least one run"), median(times)))
}

/// Full pipeline on one benchmark: for every seed, draw a training set of
/// the largest size (smaller sizes are its prefixes), learn both models,
/// draw outputs from each (the dependency network in random mode with
/// `b = k = n`, the Bayesian network ancestrally) and score them against
/// the truth.
pub fn compare(bench: &Benchmark, settings: &CompareSettings) -> Result<EvalReport> {
    let n = bench.truth.space().len();
    let max_n = *bench
        .sizes
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidConfig("no training sizes".into()))?;
    let mut report = EvalReport::default();
    for &seed in &settings.seeds {
        let full = sample_joint(&bench.truth, max_n, derive_seed(seed, TRAIN_STREAM))?;
        for &size in &bench.sizes {
            let train = full.prefix(size)?;
            let kl_train = eval_output(&train, &bench.truth)?.kl;

            let (dn, dn_ms) = timed(settings.timing_runs, || learn(&train, &settings.dn))?;
            let cfg = SamplerConfig::new(n, settings.n_out, derive_seed(seed, DN_OUT_STREAM));
            let dn_out = gibbs::run(&dn.network, &cfg)?.outputs;
            let dn_kl = eval_output(&dn_out, &bench.truth)?;

            let (bn, bn_ms) = timed(settings.timing_runs, || {
                learn_bn(&train, settings.bn_penalty, settings.bn_positivity)
            })?;
            let bn_out = ancestral_sample(
                &bn.network,
                settings.n_out,
                derive_seed(seed, BN_OUT_STREAM),
            )?;
            let bn_kl = eval_output(&bn_out, &bench.truth)?;

            for (system, kl, evals, ms) in [
                (System::Dn, dn_kl, dn.evaluations(), dn_ms),
                (System::Bn, bn_kl, bn.evaluations, bn_ms),
            ] {
                if let Some(w) = kl.warning {
                    report.warnings.push(format!(
                        "{} N={size} seed={seed} {}: {w}",
                        bench.name,
                        system.name()
                    ));
                }
                report.runs.push(RunRow {
                    dataset: bench.name.clone(),
                    n,
                    n_train: size,
                    seed,
                    system,
                    kl_train,
                    kl_out: kl.kl,
                    evaluations: evals,
                    time_ms: ms,
                });
            }

            let p_emp = empirical_distribution(&train)?;
            report.nodes.push(NodeCell {
                dataset: bench.name.clone(),
                n_train: size,
                seed,
                table: node_table(&dn.network, &p_emp, &bench.truth)?,
            });
        }
    }
    report.runs.sort_by(|a, b| {
        (&a.dataset, a.n_train, a.system, a.seed).cmp(&(&b.dataset, b.n_train, b.system, b.seed))
    });
    Ok(report)
}

/// Residuals of one randomized instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremTrial {
    pub trial: usize,
    pub n: usize,
    /// `Σ c_i KL(p || E(θ_i)) - FC(p || π)`, never negative.
    pub slack: f64,
    /// L1 residual of the stationary fixed-point equation.
    pub fixed_point: f64,
    /// `|KL(p || E(p(X_i|Y_i))) - (H(X_i|Y_i) - H(X_i|X_{-i}))|`, worst node.
    pub conditional_gap: f64,
    /// `|Σ_x (p - q)(ln q - ln r)|` for the m-projection `q` and `r ∈ E(θ_0)`.
    pub orthogonality: f64,
    /// Distance of an e-geodesic point from `E(θ_0)`.
    pub e_flat: f64,
    /// Distance of an m-geodesic point from `E(θ_0)`.
    pub m_flat: f64,
}

/// Random positive instances over 2 to `max_n` binary variables.
pub fn verify_theorems(trials: usize, max_n: usize, seed: u64) -> Result<Vec<TheoremTrial>> {
    if max_n < 2 {
        return Err(Error::InvalidConfig("need at least two variables".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|t| theorem_trial(t, max_n, &mut rng))
        .collect()
}

fn theorem_trial(trial: usize, max_n: usize, rng: &mut ChaCha8Rng) -> Result<TheoremTrial> {
    let n = rng.random_range(2..=max_n);
    let space = VarSpace::binary(n)?;
    let p = random_joint(&space, rng)?;
    let dn = random_dn(&space, 0.05, 0.95, rng)?;

    let slack = theorem3_slack(&p, &dn)?;
    let pi = stationary_exact(&dn, &Default::default())?;
    let fixed_point = fixed_point_residual(&pi, &dn)?;

    let mut conditional_gap: f64 = 0.0;
    for i in 0..n {
        let inputs = dn.inputs(i).to_vec();
        let rest: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let theta = Cpt::from_joint(&p, i, inputs.clone())?;
        let expect = p.conditional_entropy(&[i], &inputs)? - p.conditional_entropy(&[i], &rest)?;
        conditional_gap = conditional_gap.max((kl_to_manifold(&p, &theta)? - expect).abs());
    }

    let theta = dn.cpt(0);
    let q = m_project(&p, theta)?;
    let r = m_project(&random_joint(&space, rng)?, theta)?;
    let orthogonality = p
        .probs()
        .iter()
        .zip(q.probs())
        .zip(r.probs())
        .map(|((&px, &qx), &rx)| (px - qx) * (qx.ln() - rx.ln()))
        .sum::<f64>()
        .abs();

    let lambda: f64 = rng.random();
    let e_flat = conditional_residual(&e_geodesic_point(&q, &r, lambda)?, theta)?;
    let m_flat = conditional_residual(&m_geodesic_point(&q, &r, lambda)?, theta)?;
    Ok(TheoremTrial {
        trial,
        n,
        slack,
        fixed_point,
        conditional_gap,
        orthogonality,
        e_flat,
        m_flat,
    })
}

pub fn theorems_tsv(trials: &[TheoremTrial]) -> String {
    let mut out = String::from(
        "trial\tn\tslack\tfixed_point\tconditional_gap\torthogonality\te_flat\tm_flat\n",
    );
    for t in trials {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            t.trial,
            t.n,
            num(t.slack),
            num(t.fixed_point),
            num(t.conditional_gap),
            num(t.orthogonality),
            num(t.e_flat),
            num(t.m_flat)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_kl_cases() {
        let s = VarSpace::binary(1).unwrap();
        let u = JointTable::uniform(s.clone()).unwrap();
        let same = Dataset::from_rows(s.clone(), &[[0u16], [1]]).unwrap();
        assert_eq!(eval_output(&same, &u).unwrap().kl, 0.0);
        let single = Dataset::from_rows(s.clone(), &[[1u16]; 10]).unwrap();
        assert!((eval_output(&single, &u).unwrap().kl - 2f64.ln()).abs() < 1e-15);
        let point = JointTable::new(s, vec![1.0, 0.0]).unwrap();
        let r = eval_output(&single, &point).unwrap();
        assert_eq!(r.kl, f64::INFINITY);
        assert!(r.warning.is_some());
    }

    #[test]
    fn exact_draws_have_small_kl() {
        let p = JointTable::uniform(VarSpace::binary(4).unwrap()).unwrap();
        let d = sample_joint(&p, 1_000_000, 5).unwrap();
        assert!(eval_output(&d, &p).unwrap().kl < 5e-5);
    }

    #[test]
    fn node_table_identities() {
        let p = ising_joint(&IsingSpec::new(2, 2)).unwrap();
        let d = sample_joint(&p, 2000, 3).unwrap();
        let emp = empirical_distribution(&d).unwrap();
        let opts = LearnOptions {
            positivity: false,
            ..Default::default()
        };
        let dn = learn(&d, &opts).unwrap().network;
        let t = node_table(&dn, &emp, &p).unwrap();
        for r in &t.rows {
            let rest: Vec<usize> = (0..4).filter(|&j| j != r.node).collect();
            let floor = emp.conditional_entropy(&[r.node], &rest).unwrap();
            assert!((r.kl_empirical - (r.cond_entropy - floor)).abs() < 1e-10);
        }
        let avg: f64 = t.rows.iter().map(|r| 0.25 * r.kl_empirical).sum();
        assert!((avg - t.avg_kl_empirical).abs() < 1e-12);

        let same = node_table(&dn, &emp, &emp).unwrap();
        assert!(same.rows.iter().all(|r| r.kl_empirical == r.kl_true));
    }

    #[test]
    fn seeds_are_mixed() {
        assert_ne!(derive_seed(1, 1), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 1), derive_seed(2, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn small_compare_is_reproducible() {
        let bench = Benchmark {
            name: "Ising2x2".into(),
            truth: ising_joint(&IsingSpec::new(2, 2)).unwrap(),
            sizes: vec![100, 1000],
        };
        let settings = CompareSettings {
            n_out: 10_000,
            seeds: vec![4, 5],
            timing_runs: 1,
            ..Default::default()
        };
        let a = compare(&bench, &settings).unwrap();
        let b = compare(&bench, &settings).unwrap();
        assert_eq!(a.runs.len(), 8);
        assert_eq!(a.nodes.len(), 4);
        assert_eq!(a.runs_tsv(), b.runs_tsv());
        assert_eq!(a.nodes_tsv(), b.nodes_tsv());
        assert!(a.runs_tsv().starts_with("dataset\tn\tN\tseed\tsystem"));
        assert_eq!(a.runs_tsv().lines().count(), 9);
    }

    #[test]
    fn theorem_trials_hold() {
        let trials = verify_theorems(30, 4, 9).unwrap();
        for t in &trials {
            assert!(t.slack >= -1e-9);
            assert!(t.fixed_point < 1e-10);
            assert!(t.conditional_gap < 1e-10);
            assert!(t.orthogonality < 1e-9);
            assert!(t.e_flat < 1e-10 && t.m_flat < 1e-10);
        }
        assert_eq!(theorems_tsv(&trials).lines().count(), 31);
    }
}
