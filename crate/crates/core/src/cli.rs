//! Command-line front end shared by the `sgncl` binary and its tests.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or runtime
//! error, 3 size-guard violation under `--strict`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::contrastive::{
    history_csv, prepare_views, train_prepared, Denominator, OrderMode, PreparedViews, TrainConfig,
};
use crate::dataset::{ensure_attributes, load_tud, stats, write_interchange, GraphDataset};
use crate::encoder::{load_checkpoint, save_checkpoint, EncoderStack, Pool};
use crate::error::{Error, Result};
use crate::eval::{
    embed, embeddings_csv, eval_grid_csv, evaluate_prepared, similarity_matrix, sweep_csv, sweep_q,
};
use crate::sgn::{augment_all, SizeGuard};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sgncl",
    version,
    about = "Contrastive graph representation learning with subgraph-network views",
    after_help = "Environment:\n  SGNCL_THREADS  worker threads (default: available parallelism)\n  RUST_LOG       log filter (default: info)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print graph count, class count and average node and edge counts
    Stats(DataArgs),
    /// Build first- or second-order views and write them as JSON Lines
    Augment(AugmentArgs),
    /// Train encoders and write the per-epoch loss history as CSV
    Train(TrainArgs),
    /// Write original-view graph embeddings as CSV
    Embed(EmbedArgs),
    /// Score embeddings with a stratified k-fold linear probe over several seeds
    Eval(EvalArgs),
    /// Evaluate the fused objective across a grid of mixing weights
    SweepQ(SweepArgs),
    /// Write cosine similarities between sampled originals and their views
    Simmatrix(SimArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Dataset name; files are <NAME>_A.txt, <NAME>_graph_indicator.txt, ...
    #[arg(long)]
    pub dataset: String,
    /// Directory holding the dataset files or a <NAME> subdirectory
    #[arg(long, default_value = "data")]
    pub dir: PathBuf,
    /// Highest degree with its own column when degree features are added
    #[arg(long, default_value_t = crate::dataset::DEFAULT_MAX_DEGREE)]
    pub max_degree: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GuardArgs {
    /// Largest allowed node count of an augmented view
    #[arg(long, default_value_t = SizeGuard::default().max_nodes)]
    pub max_nodes: usize,
    /// Largest allowed edge count of an augmented view
    #[arg(long, default_value_t = SizeGuard::default().max_edges)]
    pub max_edges: usize,
    /// Fail with exit code 3 instead of skipping graphs that exceed the guard
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Contrastive temperature
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Weight of the first-order term in fused mode
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    /// Graphs per mini-batch
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Hidden width of every encoder layer
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    /// Message-passing layers per encoder
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    /// Adam learning rate
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-layer graph readout
    #[arg(long, value_enum, default_value_t = Pool::Sum)]
    pub pool: Pool,
    /// Terms in the contrastive denominator
    #[arg(long, value_enum, default_value_t = Denominator::NegativesOnly)]
    pub denominator: Denominator,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// View order to build
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub order: u8,
    /// Output JSON Lines file
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub guard: GuardArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Which augmented views to contrast against
    #[arg(long, value_enum, default_value_t = OrderMode::Sgn1)]
    pub mode: OrderMode,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub guard: GuardArgs,
    /// Loss-history CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also save the trained parameters to this file
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = OrderMode::Sgn1)]
    pub mode: OrderMode,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub guard: GuardArgs,
    /// Use saved parameters instead of training
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Embedding CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    /// Cross-validation folds
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Seeds; each trains its own model and draws its own folds
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = OrderMode::Sgn1)]
    pub mode: OrderMode,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub guard: GuardArgs,
    #[command(flatten)]
    pub probe: ProbeArgs,
    /// Per-seed, per-fold accuracy CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub guard: GuardArgs,
    #[command(flatten)]
    pub probe: ProbeArgs,
    /// Values of q to evaluate
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"
    )]
    pub grid: Vec<f64>,
    /// Sweep CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = OrderMode::Sgn1)]
    pub mode: OrderMode,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub guard: GuardArgs,
    /// Use saved parameters instead of training
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Number of graphs to sample
    #[arg(long, default_value_t = 20)]
    pub sample: usize,
    /// Order rows and columns by label, label 1 first
    #[arg(long)]
    pub group_by_label: bool,
    /// Augmented view order for the columns (lowest trained order when omitted)
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub view_order: Option<u8>,
    /// Similarity CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl GuardArgs {
    fn guard(&self) -> Result<SizeGuard> {
        SizeGuard::new(self.max_nodes, self.max_edges)
    }
}

fn train_config(mode: OrderMode, model: &ModelArgs, guard: &GuardArgs) -> Result<TrainConfig> {
    let config = TrainConfig {
        mode,
        tau: model.tau,
        q: model.q,
        epochs: model.epochs,
        batch: model.batch,
        hidden: model.hidden,
        layers: model.layers,
        lr: model.lr,
        seed: model.seed,
        guard: guard.guard()?,
        pool: model.pool,
        denominator: model.denominator,
    };
    config.validate()?;
    Ok(config)
}

fn load(data: &DataArgs) -> Result<GraphDataset> {
    let raw = load_tud(&data.dir, &data.dataset)?;
    ensure_attributes(&raw, data.max_degree)
}

fn log_config(command: &str, resolved: serde_json::Value) {
    log::info!("{}", json!({ "command": command, "config": resolved }));
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn prepared(
    dataset: &GraphDataset,
    config: &TrainConfig,
    guard: &GuardArgs,
) -> Result<PreparedViews> {
    if guard.strict {
        // surface the first violation with its graph and order
        for &order in config.mode.orders().iter().filter(|&&o| o > 0) {
            for r in augment_all(&dataset.graphs, order, &config.guard) {
                if let Err(e @ Error::GuardExceeded { .. }) = r {
                    return Err(e);
                }
            }
        }
    }
    prepare_views(dataset, config.mode.orders(), &config.guard)
}

fn stack_for(
    dataset: &GraphDataset,
    views: &PreparedViews,
    config: &TrainConfig,
    checkpoint: Option<&PathBuf>,
) -> Result<EncoderStack> {
    match checkpoint {
        Some(path) => {
            let (d, r) = dataset.widths()?;
            let (stack, saved): (EncoderStack, TrainConfig) = load_checkpoint(path, d, r)?;
            log::info!("loaded checkpoint trained with {}", json!(saved));
            Ok(stack)
        }
        None => Ok(train_prepared(views, config)?.stack),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Stats(data) => {
            log_config("stats", json!(data));
            let ds = load_tud(&data.dir, &data.dataset)?;
            println!("{}", stats(&ds)?);
        }
        Command::Augment(args) => {
            let guard = args.guard.guard()?;
            log_config("augment", json!({ "args": args, "guard": guard }));
            let ds = load(&args.data)?;
            let order = usize::from(args.order);
            let mut views = Vec::with_capacity(ds.len());
            let mut skipped = 0;
            for r in augment_all(&ds.graphs, order, &guard) {
                match r {
                    Ok(v) => views.push(v),
                    Err(e @ Error::GuardExceeded { .. }) if args.guard.strict => return Err(e),
                    Err(Error::GuardExceeded { .. }) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
            if skipped > 0 {
                log::warn!("skipped {skipped} graphs over the size guard");
            }
            let empty = views.iter().filter(|v| v.graph.n_nodes() == 0).count();
            if empty > 0 {
                log::warn!(
                    "{empty} of {} views are empty (source graphs without edges)",
                    views.len()
                );
            }
            let out = ds.from_views(views)?;
            write_interchange(&out, &args.out)?;
            log::info!(
                "wrote {} order-{order} views to {}",
                out.len(),
                args.out.display()
            );
        }
        Command::Train(args) => {
            let config = train_config(args.mode, &args.model, &args.guard)?;
            log_config(
                "train",
                json!({ "data": args.data, "train": config, "out": args.out, "checkpoint": args.checkpoint, "strict": args.guard.strict }),
            );
            let ds = load(&args.data)?;
            let views = prepared(&ds, &config, &args.guard)?;
            let outcome = train_prepared(&views, &config)?;
            if let Some(path) = &args.checkpoint {
                save_checkpoint(&outcome.stack, &config, path)?;
            }
            emit(&history_csv(&outcome.history), args.out.as_ref())?;
        }
        Command::Embed(args) => {
            let config = train_config(args.mode, &args.model, &args.guard)?;
            log_config(
                "embed",
                json!({ "data": args.data, "train": config, "out": args.out, "checkpoint": args.checkpoint, "strict": args.guard.strict }),
            );
            let ds = load(&args.data)?;
            let views = match &args.checkpoint {
                Some(_) => None,
                None => Some(prepared(&ds, &config, &args.guard)?),
            };
            let stack = match &views {
                Some(v) => stack_for(&ds, v, &config, None)?,
                None => {
                    let (d, r) = ds.widths()?;
                    load_checkpoint::<TrainConfig>(
                        args.checkpoint.as_ref().expect("checked"),
                        d,
                        r,
                    )?
                    .0
                }
            };
            emit(&embeddings_csv(&embed(&ds, &stack)?), args.out.as_ref())?;
        }
        Command::Eval(args) => {
            let config = train_config(args.mode, &args.model, &args.guard)?;
            log_config(
                "eval",
                json!({ "data": args.data, "train": config, "probe": args.probe, "out": args.out, "strict": args.guard.strict }),
            );
            let ds = load(&args.data)?;
            let views = prepared(&ds, &config, &args.guard)?;
            let report =
                evaluate_prepared(&ds, &views, &config, args.probe.folds, &args.probe.seeds)?;
            log::info!("accuracy {:.4} +/- {:.4}", report.mean(), report.std());
            emit(&eval_grid_csv(&report), args.out.as_ref())?;
        }
        Command::SweepQ(args) => {
            let config = train_config(OrderMode::Fused, &args.model, &args.guard)?;
            log_config(
                "sweep-q",
                json!({ "data": args.data, "train": config, "probe": args.probe, "grid": args.grid, "out": args.out, "strict": args.guard.strict }),
            );
            let ds = load(&args.data)?;
            prepared(&ds, &config, &args.guard)?;
            let rows = sweep_q(
                &ds,
                &config,
                &args.grid,
                args.probe.folds,
                &args.probe.seeds,
            )?;
            emit(&sweep_csv(&rows), args.out.as_ref())?;
        }
        Command::Simmatrix(args) => {
            let config = train_config(args.mode, &args.model, &args.guard)?;
            log_config(
                "simmatrix",
                json!({ "data": args.data, "train": config, "checkpoint": args.checkpoint, "sample": args.sample, "group_by_label": args.group_by_label, "view_order": args.view_order, "out": args.out, "strict": args.guard.strict }),
            );
            let ds = load(&args.data)?;
            let views = prepared(&ds, &config, &args.guard)?;
            let stack = stack_for(&ds, &views, &config, args.checkpoint.as_ref())?;
            let order = match args.view_order {
                Some(o) => usize::from(o),
                None => stack.orders().into_iter().find(|&o| o > 0).unwrap_or(1),
            };
            let m = similarity_matrix(
                &ds,
                &stack,
                &views,
                order,
                args.sample,
                args.group_by_label,
                config.seed,
            )?;
            log::info!(
                "mean diagonal {:.4}, mean off-diagonal {:.4}",
                m.mean_diagonal(),
                m.mean_off_diagonal()
            );
            emit(&m.to_csv(), args.out.as_ref())?;
        }
    }
    Ok(())
}

/// Exit code for an error surfaced by a subcommand.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) => EXIT_USAGE,
        Error::GuardExceeded { .. } => EXIT_GUARD,
        _ => EXIT_DATA,
    }
}

fn thread_count() -> Option<usize> {
    let value = std::env::var("SGNCL_THREADS").ok()?;
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            log::warn!("ignoring SGNCL_THREADS={value:?}; expected a positive integer");
            None
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count() {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            log::error!("cannot start worker pool: {e}");
            return EXIT_DATA;
        }
    };
    match pool.install(|| execute(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            exit_code(&e)
        }
    }
}
