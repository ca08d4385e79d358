//! `novelty-eval`: run the novelty-weighted evaluation pipeline stage by stage.

mod commands;
mod config;
mod failure;
mod formats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context;
use config::PipelineConfig;
use failure::{CliResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "novelty-eval", version, about = "Novelty-weighted generalization scoring for object detectors")]
struct Cli {
    /// JSON config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice (else config, else NOVELTY_EVAL_SEED, else 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic traffic-light dataset.
    GenData(commands::GenDataArgs),
    /// Train the β-VAE on a dataset's crops.
    TrainVae(commands::TrainVaeArgs),
    /// Embed a dataset with a trained VAE.
    Encode(commands::EncodeArgs),
    /// Fit a novelty scorer on training embeddings.
    FitScorer(commands::FitScorerArgs),
    /// Score test embeddings for novelty.
    Score(commands::ScoreArgs),
    /// Synthesize detections with the stub detector.
    Detect(commands::DetectArgs),
    /// Match detections, weight losses by novelty and report G.
    Evaluate(commands::EvaluateArgs),
    /// Contamination study comparing scorers by ROC-AUC.
    Benchmark(commands::BenchmarkArgs),
    /// Rank latent dimensions by MI and export traversals.
    Interpret(commands::InterpretArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let config = PipelineConfig::load(cli.config.as_deref())?;
    let threads = cli.threads.or(config.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::invalid("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::invalid(format!("cannot start {n} threads: {e}")))?;
    }
    let seed = config::resolve_seed(cli.seed, config.seed)?;
    let ctx = Context { config, seed };
    match cli.command {
        Command::GenData(a) => commands::gen_data(a, &ctx),
        Command::TrainVae(a) => commands::train_vae(a, &ctx),
        Command::Encode(a) => commands::encode(a, &ctx),
        Command::FitScorer(a) => commands::fit_scorer(a, &ctx),
        Command::Score(a) => commands::score(a, &ctx),
        Command::Detect(a) => commands::detect(a, &ctx),
        Command::Evaluate(a) => commands::evaluate(a, &ctx),
        Command::Benchmark(a) => commands::benchmark(a, &ctx),
        Command::Interpret(a) => commands::interpret(a, &ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if json {
                eprintln!("{}", f.to_json());
            } else {
                eprintln!("error: {f}");
            }
            ExitCode::from(f.code as u8)
        }
    }
}
