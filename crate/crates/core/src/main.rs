//! `dpsim`: differentially private ad-selection simulator.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for data errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use dpsim::cli::{
    cmd_compare_mechanisms, cmd_generate, cmd_pricing_experiment, cmd_simulate, cmd_sweep,
    default_synthetic_spec, parse_bid_model, parse_edges, parse_grid, parse_score_dist,
    parse_server_model, pricing_benchmark_spec, DataSource, ExperimentConfig, Sweep,
};
use dpsim::data::SyntheticSpec;
use dpsim::error::Error;
use dpsim::mechanisms::{Bounding, MechanismConfig, MechanismKind, NoiseKind};
use dpsim::pipeline::{EvaluationMode, PipelineConfig, PricingSource};

#[derive(Parser)]
#[command(
    name = "dpsim",
    version,
    about = "Differentially private ad-selection simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic auction dataset as JSONL.
    Generate {
        #[command(flatten)]
        data: DataArgs,
        /// Output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one configuration and emit a metrics CSV.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a grid over epsilon, gamma, the clipping bound, or alpha.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated epsilon grid.
        #[arg(long, value_name = "GRID")]
        epsilon_grid: Option<String>,
        /// Comma-separated gamma grid.
        #[arg(long, value_name = "GRID")]
        gamma_grid: Option<String>,
        /// Comma-separated sensitivity (clipping bound) grid.
        #[arg(long, value_name = "GRID")]
        delta_grid: Option<String>,
        /// Comma-separated pClick mixing grid.
        #[arg(long, value_name = "GRID")]
        alpha_grid: Option<String>,
    },
    /// Compare pricing-information sources under fixed greedy selection.
    PricingExperiment {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Per-auction expected values of RR vs scaled/clipped SNM over an
    /// epsilon grid.
    CompareMechanisms {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated epsilon grid.
        #[arg(long, value_name = "GRID")]
        epsilon_grid: Option<String>,
        /// Candidate-count bucket edges, e.g. 3,10.
        #[arg(long, value_name = "EDGES")]
        buckets: Option<String>,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Auction log to load (.jsonl, .json, or .csv).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthetic-spec TOML file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Synthetic: number of auctions.
    #[arg(long)]
    auctions: Option<usize>,
    /// Synthetic: candidates per auction.
    #[arg(long)]
    candidates: Option<usize>,
    /// Synthetic: device score law (uniform01 | bernoulli:P).
    #[arg(long)]
    score_dist: Option<String>,
    /// Synthetic: bid law (unit | loguniform:LOW:HIGH).
    #[arg(long)]
    bid_model: Option<String>,
    /// Synthetic: server pClick law (independent | mixed:ALPHA).
    #[arg(long)]
    server_model: Option<String>,
    /// Synthetic: generation seed.
    #[arg(long)]
    gen_seed: Option<u64>,
    /// Treat --input as a raw interaction log grouped by (user, timestamp).
    #[arg(long)]
    taobao: bool,
    /// Bid = constant × item price when grouping interaction logs.
    #[arg(long, default_value_t = 1.0)]
    bid_constant: f64,
    /// Abort on the first rejected input row.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct CommonArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Selection mechanism (rr | snm).
    #[arg(long)]
    mechanism: Option<String>,
    /// SNM noise family (gumbel | exponential | laplace).
    #[arg(long)]
    noise: Option<String>,
    /// Sensitivity bounding (none | scaled | clipped).
    #[arg(long)]
    bounding: Option<String>,
    /// Privacy parameter epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sensitivity delta.
    #[arg(long)]
    delta: Option<f64>,
    /// Bag-of-contents cutoff gamma in [0, 1].
    #[arg(long)]
    gamma: Option<f64>,
    /// pClick mixing fraction alpha in [0, 1] applied to the dataset.
    #[arg(long)]
    alpha: Option<f64>,
    /// Pricing source (server | device | naive).
    #[arg(long)]
    pricing: Option<String>,
    /// Evaluation mode (expected | sampled).
    #[arg(long)]
    mode: Option<String>,
    /// Monte Carlo trials for expected-mode distributions without closed
    /// forms.
    #[arg(long)]
    mc_trials: Option<u64>,
    /// Replicates per configuration point.
    #[arg(long)]
    replicates: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Output bytes do not depend on
    /// this.
    #[arg(long)]
    threads: Option<usize>,
    /// Experiment config TOML; flags win over file values.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Optional file-based configuration; any present key acts as a default that
/// command-line flags override.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    spec: Option<SyntheticSpec>,
    taobao: Option<bool>,
    bid_constant: Option<f64>,
    strict: Option<bool>,
    mechanism: Option<String>,
    noise: Option<String>,
    bounding: Option<String>,
    epsilon: Option<f64>,
    delta: Option<f64>,
    gamma: Option<f64>,
    alpha: Option<f64>,
    pricing: Option<String>,
    mode: Option<String>,
    mc_trials: Option<u64>,
    replicates: Option<u64>,
    seed: Option<u64>,
    threads: Option<usize>,
}

fn parse_mechanism(s: &str) -> Result<MechanismKind, Error> {
    match s {
        "rr" => Ok(MechanismKind::Rr),
        "snm" => Ok(MechanismKind::Snm),
        _ => Err(Error::invalid_config(format!(
            "unknown mechanism {s:?}; expected rr or snm"
        ))),
    }
}

fn parse_noise(s: &str) -> Result<NoiseKind, Error> {
    match s {
        "gumbel" => Ok(NoiseKind::Gumbel),
        "exponential" => Ok(NoiseKind::Exponential),
        "laplace" => Ok(NoiseKind::Laplace),
        _ => Err(Error::invalid_config(format!(
            "unknown noise {s:?}; expected gumbel, exponential or laplace"
        ))),
    }
}

fn parse_bounding(s: &str) -> Result<Bounding, Error> {
    match s {
        "none" => Ok(Bounding::None),
        "scaled" => Ok(Bounding::Scaled),
        "clipped" => Ok(Bounding::Clipped),
        _ => Err(Error::invalid_config(format!(
            "unknown bounding {s:?}; expected none, scaled or clipped"
        ))),
    }
}

fn parse_pricing(s: &str) -> Result<PricingSource, Error> {
    match s {
        "server" | "server_pclick" => Ok(PricingSource::ServerPClick),
        "device" | "device_pclick" => Ok(PricingSource::DevicePClick),
        "naive" | "naive_global_mean" => Ok(PricingSource::NaiveGlobalMean),
        _ => Err(Error::invalid_config(format!(
            "unknown pricing source {s:?}; expected server, device or naive"
        ))),
    }
}

fn parse_mode(s: &str) -> Result<EvaluationMode, Error> {
    match s {
        "expected" => Ok(EvaluationMode::Expected),
        "sampled" => Ok(EvaluationMode::Sampled),
        _ => Err(Error::invalid_config(format!(
            "unknown mode {s:?}; expected expected or sampled"
        ))),
    }
}

fn load_file_config(path: Option<&PathBuf>) -> Result<FileConfig, Error> {
    match path {
        None => Ok(FileConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::invalid_config(format!("cannot read {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| Error::invalid_config(format!("{}: {e}", path.display())))
        }
    }
}

/// Assemble the synthetic spec from file config and flag overrides.
fn resolve_spec(
    data: &DataArgs,
    file: &FileConfig,
    fallback: SyntheticSpec,
) -> Result<SyntheticSpec, Error> {
    let mut spec = match (&data.spec, &file.spec) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::invalid_config(format!("cannot read {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| Error::invalid_config(format!("{}: {e}", path.display())))?
        }
        (None, Some(spec)) => spec.clone(),
        (None, None) => fallback,
    };
    if let Some(n) = data.auctions {
        spec.num_auctions = n;
    }
    if let Some(k) = data.candidates {
        spec.candidates_per_auction = k;
    }
    if let Some(s) = &data.score_dist {
        spec.score_distribution = parse_score_dist(s)?;
    }
    if let Some(s) = &data.bid_model {
        spec.bid_model = parse_bid_model(s)?;
    }
    if let Some(s) = &data.server_model {
        spec.server_score_model = parse_server_model(s)?;
    }
    if let Some(seed) = data.gen_seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn resolve_config(
    common: &CommonArgs,
    default_spec: SyntheticSpec,
) -> Result<(ExperimentConfig, Option<usize>), Error> {
    let file = load_file_config(common.config.as_ref())?;

    let mut mechanism = MechanismConfig::rr(5.0);
    if let Some(s) = common.mechanism.as_deref().or(file.mechanism.as_deref()) {
        mechanism.kind = parse_mechanism(s)?;
    }
    if let Some(s) = common.noise.as_deref().or(file.noise.as_deref()) {
        mechanism.noise = parse_noise(s)?;
    }
    if let Some(s) = common.bounding.as_deref().or(file.bounding.as_deref()) {
        mechanism.bounding = parse_bounding(s)?;
    }
    if let Some(e) = common.epsilon.or(file.epsilon) {
        mechanism.epsilon = e;
    }
    if let Some(d) = common.delta.or(file.delta) {
        mechanism.delta = d;
    }

    let mut pipeline = PipelineConfig::new(mechanism, 1.0);
    if let Some(g) = common.gamma.or(file.gamma) {
        pipeline.gamma = g;
    }
    if let Some(s) = common.pricing.as_deref().or(file.pricing.as_deref()) {
        pipeline.pricing_source = parse_pricing(s)?;
    }
    if let Some(s) = common.mode.as_deref().or(file.mode.as_deref()) {
        pipeline.evaluation_mode = parse_mode(s)?;
    }
    if let Some(t) = common.mc_trials.or(file.mc_trials) {
        pipeline.mc_trials = t;
    }

    let source = match common.data.input.clone().or(file.input.clone()) {
        Some(path) => DataSource::Path(path),
        None => DataSource::Synthetic(resolve_spec(&common.data, &file, default_spec)?),
    };

    let mut cfg = ExperimentConfig::new(source, pipeline);
    cfg.alpha = common.alpha.or(file.alpha).unwrap_or(1.0);
    cfg.replicates = common.replicates.or(file.replicates).unwrap_or(1);
    cfg.master_seed = common.seed.or(file.seed).unwrap_or(0);
    cfg.strict = common.data.strict || file.strict.unwrap_or(false);
    cfg.bid_constant = if common.data.bid_constant != 1.0 {
        common.data.bid_constant
    } else {
        file.bid_constant.unwrap_or(1.0)
    };
    cfg.taobao = common.data.taobao || file.taobao.unwrap_or(false);
    let threads = common.threads.or(file.threads);
    Ok((cfg, threads))
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write + Send>, Error> {
    match path {
        None => Ok(Box::new(std::io::stdout())),
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))?;
            Ok(Box::new(std::io::BufWriter::new(file)))
        }
    }
}

fn in_thread_pool<T>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, Error> + Send,
) -> Result<T, Error>
where
    T: Send,
{
    match threads {
        None | Some(0) => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid_config(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate { data, out } => {
            let file = FileConfig::default();
            let spec = resolve_spec(&data, &file, default_synthetic_spec())?;
            let (records, candidates) = cmd_generate(&spec, &out)?;
            println!(
                "wrote {records} auctions ({candidates} candidates) to {}",
                out.display()
            );
            Ok(())
        }
        Command::Simulate { common } => {
            let (cfg, threads) = resolve_config(&common, default_synthetic_spec())?;
            let mut out = open_output(common.out.as_ref())?;
            in_thread_pool(threads, || cmd_simulate(&cfg, out.as_mut()))
        }
        Command::Sweep {
            common,
            epsilon_grid,
            gamma_grid,
            delta_grid,
            alpha_grid,
        } => {
            let (mut cfg, threads) = resolve_config(&common, default_synthetic_spec())?;
            let grids = [
                epsilon_grid.map(|g| parse_grid(&g).map(Sweep::Epsilon)),
                gamma_grid.map(|g| parse_grid(&g).map(Sweep::Gamma)),
                delta_grid.map(|g| parse_grid(&g).map(Sweep::Clip)),
                alpha_grid.map(|g| parse_grid(&g).map(Sweep::Alpha)),
            ];
            let mut chosen: Vec<Sweep> = Vec::new();
            for grid in grids.into_iter().flatten() {
                chosen.push(grid?);
            }
            match chosen.len() {
                0 => {
                    return Err(Error::invalid_config(
                        "sweep requires exactly one of --epsilon-grid, --gamma-grid, \
                         --delta-grid, --alpha-grid",
                    ))
                }
                1 => cfg.sweep = chosen.pop().expect("one grid"),
                _ => {
                    return Err(Error::invalid_config(
                        "sweep takes exactly one grid flag at a time",
                    ))
                }
            }
            let mut out = open_output(common.out.as_ref())?;
            in_thread_pool(threads, || cmd_sweep(&cfg, out.as_mut()))
        }
        Command::PricingExperiment { common } => {
            let (cfg, threads) = resolve_config(&common, pricing_benchmark_spec())?;
            let mut out = open_output(common.out.as_ref())?;
            in_thread_pool(threads, || cmd_pricing_experiment(&cfg, out.as_mut()))
        }
        Command::CompareMechanisms {
            common,
            epsilon_grid,
            buckets,
        } => {
            let (mut cfg, threads) = resolve_config(&common, default_synthetic_spec())?;
            let grid = epsilon_grid
                .as_deref()
                .map(parse_grid)
                .transpose()?
                .unwrap_or_else(|| vec![0.5, 1.0, 2.0, 5.0, 10.0]);
            cfg.sweep = Sweep::Epsilon(grid);
            let edges = buckets
                .as_deref()
                .map(parse_edges)
                .transpose()?
                .unwrap_or_default();
            let mut out = open_output(common.out.as_ref())?;
            in_thread_pool(threads, || {
                cmd_compare_mechanisms(&cfg, &edges, out.as_mut())
            })
        }
    }
}

fn main() -> ExitCode {
    // Exit code contract: 0 success, 1 config error, 2 data error. Clap's
    // default error exit (2) would collide with the data-error code.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if err.use_stderr() => {
            let _ = err.print();
            return ExitCode::from(1);
        }
        Err(help_or_version) => {
            let _ = help_or_version.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("dpsim: {err}");
            match err {
                Error::Data(_) | Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
