//! `mdm` — spammer detection over multi-relational interaction logs.
//!
//! Four commands cover the pipeline end to end: `synth` writes a seeded
//! corpus, `train` fits the sequence model and writes a checkpoint,
//! `features` extracts classifier feature matrices, and `eval` scores a
//! matrix over stratified splits. Every command accepts `--config run.toml`
//! with explicit flags taking precedence, and echoes the resolved
//! configuration into its output directory. Exit codes: 0 success, 1 domain
//! error, 2 usage error.

mod config;
mod ops;

use clap::{Args, Parser, Subcommand};
use config::{FeatureModeFlag, RunConfig, StageFlag, WindowFlag};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mdm", version, about = "Spammer detection over multi-relational interaction logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus (events.csv + labels.csv)
    Synth(SynthArgs),
    /// Pre-train the encoder, train the ranking model, write a checkpoint
    Train(TrainArgs),
    /// Extract a feature matrix for the labeled users
    Features(FeaturesArgs),
    /// Score a feature matrix over stratified train/test splits
    Eval(EvalArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Seed for every random choice the command makes
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of users to simulate
    #[arg(long)]
    users: Option<usize>,
    /// Probability that a user is a spammer
    #[arg(long)]
    spam: Option<f64>,
    /// Mean interactions per user
    #[arg(long)]
    mean_length: Option<f64>,
}

#[derive(Args)]
struct CorpusArgs {
    /// Events file: `timestamp,src,dst,relation` rows
    #[arg(long)]
    events: Option<PathBuf>,
    /// Labels file: `user_id,label` rows with label 0 or 1
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Number of relation types in the log
    #[arg(long)]
    relations: Option<usize>,
}

#[derive(Args)]
struct ModelShapeArgs {
    /// Embedding width
    #[arg(long)]
    d: Option<usize>,
    /// Recent-window length
    #[arg(long)]
    n: Option<usize>,
    /// Individual-level residual layers
    #[arg(long)]
    k: Option<usize>,
    /// Union-level residual layers
    #[arg(long = "L")]
    l: Option<usize>,
    /// Recent-window anchoring
    #[arg(long)]
    window: Option<WindowFlag>,
    /// Pipeline cut to run
    #[arg(long)]
    stage: Option<StageFlag>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    shape: ModelShapeArgs,
    /// Ranking epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Encoder pre-training epochs
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    /// Ranking pairs per batch
    #[arg(long)]
    batch_pairs: Option<usize>,
    /// Step size for every optimizer update
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Weight-decay strength
    #[arg(long)]
    lambda: Option<f64>,
    /// Keep the pre-trained encoder fixed during ranking
    #[arg(long)]
    freeze_embed: bool,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    shape: ModelShapeArgs,
    /// Feature family to extract
    #[arg(long, value_parser = ["kgram", "graph", "mdm", "all"])]
    which: String,
    /// Trained model checkpoint (required for `mdm` and `all`)
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Relation-block granularity of model features
    #[arg(long)]
    feature_mode: Option<FeatureModeFlag>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Feature matrix file produced by `features`
    #[arg(long)]
    features: Option<PathBuf>,
    /// Labels file: `user_id,label` rows with label 0 or 1
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Number of split seeds (0, 1, ..., N-1)
    #[arg(long)]
    seeds: Option<usize>,
    /// Share of each class held out for testing
    #[arg(long)]
    test_fraction: Option<f64>,
}

fn overlay<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn overlay_opt<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn resolve_common(cfg: &mut RunConfig, common: &CommonArgs) -> anyhow::Result<()> {
    cfg.overlay_file(common.config.as_deref())?;
    overlay(&mut cfg.seed, common.seed);
    Ok(())
}

fn resolve_corpus(cfg: &mut RunConfig, corpus: CorpusArgs) {
    overlay_opt(&mut cfg.events, corpus.events);
    overlay_opt(&mut cfg.labels, corpus.labels);
    overlay(&mut cfg.relations, corpus.relations);
}

fn resolve_shape(cfg: &mut RunConfig, shape: ModelShapeArgs) {
    overlay(&mut cfg.d, shape.d);
    overlay(&mut cfg.n, shape.n);
    overlay(&mut cfg.k, shape.k);
    overlay(&mut cfg.l, shape.l);
    overlay(&mut cfg.window, shape.window);
    overlay(&mut cfg.stage, shape.stage);
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(args) => {
            let mut cfg = RunConfig::default();
            resolve_common(&mut cfg, &args.common)?;
            overlay(&mut cfg.users, args.users);
            overlay(&mut cfg.spam, args.spam);
            overlay(&mut cfg.mean_length, args.mean_length);
            ops::synth(&cfg, &args.common.out)
        }
        Command::Train(args) => {
            let mut cfg = RunConfig::default();
            resolve_common(&mut cfg, &args.common)?;
            resolve_corpus(&mut cfg, args.corpus);
            resolve_shape(&mut cfg, args.shape);
            overlay(&mut cfg.epochs, args.epochs);
            overlay(&mut cfg.pretrain_epochs, args.pretrain_epochs);
            overlay(&mut cfg.batch_pairs, args.batch_pairs);
            overlay(&mut cfg.learning_rate, args.learning_rate);
            overlay(&mut cfg.lambda, args.lambda);
            if args.freeze_embed {
                cfg.freeze_embed = true;
            }
            ops::train(&cfg, &args.common.out)
        }
        Command::Features(args) => {
            let mut cfg = RunConfig::default();
            resolve_common(&mut cfg, &args.common)?;
            resolve_corpus(&mut cfg, args.corpus);
            resolve_shape(&mut cfg, args.shape);
            overlay_opt(&mut cfg.checkpoint, args.checkpoint);
            overlay(&mut cfg.feature_mode, args.feature_mode);
            cfg.which = Some(args.which.clone());
            ops::features(&cfg, &args.common.out, &args.which)
        }
        Command::Eval(args) => {
            let mut cfg = RunConfig::default();
            resolve_common(&mut cfg, &args.common)?;
            overlay_opt(&mut cfg.features, args.features);
            overlay_opt(&mut cfg.labels, args.labels);
            overlay(&mut cfg.seeds, args.seeds);
            overlay(&mut cfg.test_fraction, args.test_fraction);
            ops::eval(&cfg, &args.common.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(ops::exit_code_for(&err))
        }
    }
}
