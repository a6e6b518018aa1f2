use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use depnet_core::bayesnet::{ancestral_sample, learn_bn};
use depnet_core::depnet::learn;
use depnet_core::discrete::empirical_distribution;
use depnet_core::eval::{
    compare, default_benchmarks, eval_output, node_table, theorems_tsv, verify_theorems,
    CompareSettings,
};
use depnet_core::format::{
    fmt_sig, parse_bayesnet, parse_dataset, parse_depnet, parse_joint, write_bayesnet,
    write_dataset, write_depnet, write_joint,
};
use depnet_core::gibbs::{self, infer, InitialState};
use depnet_core::synth::{bn_joint, ising_joint, random_bn, sample_joint, IsingSpec, RandomBnSpec};
use depnet_core::{
    BayesianNetwork, Clamps, Dataset, DependencyNetwork, JointTable, LearnOptions, Mode,
    PenaltySpec, SamplerConfig, Value,
};

/// Dependency networks: learning, pseudo-Gibbs sampling and evaluation.
#[derive(Parser)]
#[command(name = "depnet", version)]
struct Cli {
    /// Random seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Structure penalty.
    #[arg(long, global = true, default_value = "mdl")]
    penalty: PenaltySpec,
    /// Add-one-per-cell smoothing of learned tables.
    #[arg(long, global = true, value_enum, default_value_t = Switch::On)]
    positivity: Switch,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Random Bayesian network with Dirichlet tables.
    GenBn {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = 2)]
        card: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Write the exact joint table instead of the network.
        #[arg(long)]
        joint: bool,
    },
    /// Exact joint table of a binary Ising grid.
    GenIsing {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 0.4)]
        coupling: f64,
        #[arg(long, default_value_t = 0.0)]
        field: f64,
    },
    /// Draw i.i.d. samples from a joint table or Bayesian network file.
    SampleTrue {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Learn a dependency network from a dataset.
    LearnDn {
        #[arg(long)]
        data: PathBuf,
        /// Fall back to all other variables when that scores no worse.
        #[arg(long)]
        guard: bool,
    },
    /// Learn a Bayesian network by hill climbing.
    LearnBn {
        #[arg(long)]
        data: PathBuf,
    },
    /// Pseudo-Gibbs sampling from a dependency network (ancestral for a
    /// Bayesian network file).
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Estimate p(query | clamps) by clamped sampling.
    Infer {
        #[arg(long)]
        model: PathBuf,
        /// Query variable ids.
        #[arg(long, value_delimiter = ',', required = true)]
        query: Vec<usize>,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// KL of sampled outputs against a truth, or the per-node table of a
    /// learned network.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, conflicts_with_all = ["model", "data"])]
        outputs: Option<PathBuf>,
        #[arg(long, requires = "data")]
        model: Option<PathBuf>,
        /// Training data of `model`.
        #[arg(long, requires = "model")]
        data: Option<PathBuf>,
    },
    /// DN vs BN on the benchmark suite.
    Compare {
        /// Larger benchmarks (BN20-37, Ising5x5).
        #[arg(long)]
        full: bool,
        /// Restrict to one benchmark by name.
        #[arg(long)]
        bench: Option<String>,
        /// Output samples drawn from each learned model.
        #[arg(long, default_value_t = 1_000_000)]
        n_out: usize,
        /// Seeds used are `seed, seed+1, ...`.
        #[arg(long, default_value_t = 3)]
        trials: u64,
        /// Learning repetitions whose median time is reported.
        #[arg(long, default_value_t = 3)]
        timing_runs: usize,
        /// Where to write the timing TSV.
        #[arg(long)]
        timings: Option<PathBuf>,
        /// Where to write the per-node TSV.
        #[arg(long)]
        nodes: Option<PathBuf>,
    },
    /// Random-trial residuals of the projection and bound identities.
    VerifyTheorems {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
    },
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long, default_value = "random")]
    mode: Mode,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Burn-in firings; defaults to the number of nodes.
    #[arg(long)]
    burn_in: Option<u64>,
    /// Firings between recorded samples; defaults to the number of nodes.
    #[arg(long)]
    thin: Option<u64>,
    /// Evidence as VAR=VAL; repeatable.
    #[arg(long, value_parser = parse_clamp, num_args = 1..)]
    clamp: Vec<(usize, Value)>,
    /// Fixed initial state, comma separated.
    #[arg(long, value_delimiter = ',')]
    init: Option<Vec<Value>>,
}

fn parse_clamp(s: &str) -> std::result::Result<(usize, Value), String> {
    let (var, val) = s
        .split_once('=')
        .ok_or_else(|| format!("expected VAR=VAL, got {s:?}"))?;
    let var = var
        .trim()
        .parse()
        .map_err(|e| format!("bad variable in {s:?}: {e}"))?;
    let val = val
        .trim()
        .parse()
        .map_err(|e| format!("bad value in {s:?}: {e}"))?;
    Ok((var, val))
}

enum Model {
    Dn(DependencyNetwork),
    Bn(BayesianNetwork),
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn header(text: &str) -> Option<&str> {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .and_then(|l| l.split_whitespace().next())
}

fn load_model(path: &Path) -> Result<Model> {
    let text = read(path)?;
    let ctx = || format!("parsing {}", path.display());
    match header(&text) {
        Some("depnet") => Ok(Model::Dn(parse_depnet(&text).with_context(ctx)?)),
        Some("bayesnet") => Ok(Model::Bn(parse_bayesnet(&text).with_context(ctx)?)),
        _ => bail!("{} is not a depnet or bayesnet file", path.display()),
    }
}

/// A joint table file, or a Bayesian network file expanded to its joint.
fn load_truth(path: &Path) -> Result<JointTable> {
    let text = read(path)?;
    let ctx = || format!("parsing {}", path.display());
    match header(&text) {
        Some("joint") => Ok(parse_joint(&text).with_context(ctx)?),
        Some("bayesnet") => Ok(bn_joint(&parse_bayesnet(&text).with_context(ctx)?)?),
        _ => bail!("{} is not a joint or bayesnet file", path.display()),
    }
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn sampler_config(dn: &DependencyNetwork, args: &SamplerArgs, seed: u64) -> Result<SamplerConfig> {
    let n = dn.len() as u64;
    let clamps = Clamps::new(dn.space(), args.clamp.clone())?;
    let mut cfg = SamplerConfig::new(dn.len(), args.samples, seed)
        .with_mode(args.mode)
        .with_clamps(clamps)
        .with_schedule(args.burn_in.unwrap_or(n), args.thin.unwrap_or(n));
    if let Some(init) = &args.init {
        cfg.initial = InitialState::Fixed(init.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    let positivity = cli.positivity == Switch::On;
    let learn_opts = |guard| LearnOptions {
        penalty: cli.penalty,
        positivity,
        guard,
        ..Default::default()
    };

    match &cli.command {
        Command::GenBn {
            nodes,
            edges,
            card,
            alpha,
            joint,
        } => {
            let spec = RandomBnSpec {
                card: *card,
                alpha: *alpha,
                ..RandomBnSpec::new(*nodes, *edges, cli.seed)
            };
            let bn = random_bn(&spec)?;
            let text = if *joint {
                write_joint(&bn_joint(&bn)?)
            } else {
                write_bayesnet(&bn)
            };
            emit(out, &text)
        }
        Command::GenIsing {
            rows,
            cols,
            coupling,
            field,
        } => {
            let spec = IsingSpec {
                coupling: *coupling,
                field: *field,
                ..IsingSpec::new(*rows, *cols)
            };
            emit(out, &write_joint(&ising_joint(&spec)?))
        }
        Command::SampleTrue { truth, n } => {
            let p = load_truth(truth)?;
            emit(out, &write_dataset(&sample_joint(&p, *n, cli.seed)?))
        }
        Command::LearnDn { data, guard } => {
            let d = load_dataset(data)?;
            let learned = learn(&d, &learn_opts(*guard))?;
            eprintln!("evaluations\t{}", learned.evaluations());
            emit(out, &write_depnet(&learned.network))
        }
        Command::LearnBn { data } => {
            let d = load_dataset(data)?;
            let learned = learn_bn(&d, cli.penalty, positivity)?;
            eprintln!("evaluations\t{}", learned.evaluations);
            emit(out, &write_bayesnet(&learned.network))
        }
        Command::Sample { model, sampler } => match load_model(model)? {
            Model::Dn(dn) => {
                let cfg = sampler_config(&dn, sampler, cli.seed)?;
                emit(out, &write_dataset(&gibbs::run(&dn, &cfg)?.outputs))
            }
            Model::Bn(bn) => {
                if !sampler.clamp.is_empty() {
                    bail!("clamped sampling needs a dependency network");
                }
                emit(
                    out,
                    &write_dataset(&ancestral_sample(&bn, sampler.samples, cli.seed)?),
                )
            }
        },
        Command::Infer {
            model,
            query,
            sampler,
        } => {
            let Model::Dn(dn) = load_model(model)? else {
                bail!("inference needs a dependency network");
            };
            let cfg = sampler_config(&dn, sampler, cli.seed)?;
            let res = infer(&dn, query, &cfg)?;
            let mut text: String = query.iter().map(|v| format!("x{v}\t")).collect();
            text.push_str("p\n");
            for (idx, p) in res.estimate.iter().enumerate() {
                for v in res.query_space.decode(idx as u64) {
                    text.push_str(&format!("{v}\t"));
                }
                text.push_str(&fmt_sig(*p, 6));
                text.push('\n');
            }
            emit(out, &text)
        }
        Command::Eval {
            truth,
            outputs,
            model,
            data,
        } => {
            let p_true = load_truth(truth)?;
            if let Some(outputs) = outputs {
                let res = eval_output(&load_dataset(outputs)?, &p_true)?;
                if let Some(w) = &res.warning {
                    eprintln!("warning: {w}");
                }
                return emit(out, &format!("kl\n{}\n", fmt_sig(res.kl, 6)));
            }
            let (Some(model), Some(data)) = (model, data) else {
                bail!("eval needs --outputs, or --model with --data");
            };
            let Model::Dn(dn) = load_model(model)? else {
                bail!("the node table needs a dependency network");
            };
            let p_emp = empirical_distribution(&load_dataset(data)?)?;
            emit(out, &node_table(&dn, &p_emp, &p_true)?.tsv())
        }
        Command::Compare {
            full,
            bench,
            n_out,
            trials,
            timing_runs,
            timings,
            nodes,
        } => {
            let settings = CompareSettings {
                dn: learn_opts(false),
                bn_penalty: cli.penalty,
                bn_positivity: positivity,
                n_out: *n_out,
                seeds: (0..*trials).map(|t| cli.seed + t).collect(),
                timing_runs: *timing_runs,
            };
            let mut benches = default_benchmarks(*full)?;
            if let Some(name) = bench {
                benches.retain(|b| &b.name == name);
                if benches.is_empty() {
                    bail!("no benchmark named {name:?}");
                }
            }
            let (mut runs, mut times, mut node_rows) =
                (String::new(), String::new(), String::new());
            for (k, b) in benches.iter().enumerate() {
                let report = compare(b, &settings)?;
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
                // keep only the first header line of each table
                let skip = usize::from(k > 0);
                for (dst, src) in [
                    (&mut runs, report.runs_tsv()),
                    (&mut times, report.timings_tsv()),
                    (&mut node_rows, report.nodes_tsv()),
                ] {
                    for line in src.lines().skip(skip) {
                        dst.push_str(line);
                        dst.push('\n');
                    }
                }
            }
            match timings {
                Some(p) => emit(Some(p), &times)?,
                None => eprint!("{times}"),
            }
            if let Some(p) = nodes {
                emit(Some(p), &node_rows)?;
            }
            emit(out, &runs)
        }
        Command::VerifyTheorems { trials, max_n } => emit(
            out,
            &theorems_tsv(&verify_theorems(*trials, *max_n, cli.seed)?),
        ),
    }
}
