//! The `frenet-wrap` command line.
//!
//! Every subcommand reads its settings from flags first, then from the
//! optional `--config` TOML file (flat `key = value` pairs named like the
//! long flags, with `-` written as `_`), then from built-in defaults. The
//! resolved settings are written to a `manifest.json` in every output
//! directory.

mod commands;
mod config;
mod files;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::Config;
pub use files::{list_scene_files, PredictionFile};
pub use plot::render_svg;

#[derive(Debug, Parser)]
#[command(name = "frenet-wrap", version, about = "Frenet-frame prediction wrapper and map-perturbation benchmark")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for every random choice of the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML file with default values for the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene corpus.
    Generate(GenerateArgs),
    /// Apply a map attack in both directions to every scene of a corpus.
    Perturb(PerturbArgs),
    /// Forecast every scene of a corpus.
    Predict(PredictArgs),
    /// Score predictions against their scenes.
    Evaluate(EvaluateArgs),
    /// Train the lane-scoring network on a corpus.
    TrainScorer(TrainArgs),
    /// Write every scene in the Frenet frame of its ground-truth centerline.
    ExportFrenet(ExportArgs),
    /// Draw scenes and predictions as SVG.
    Plot(PlotArgs),
    /// Reference external predictor speaking the line protocol on stdio.
    #[command(hide = true)]
    LoopbackPredictor(LoopbackArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Topology weights, e.g. `fork=0.5,curve=0.3,straight=0.2`.
    #[arg(long)]
    pub mix: Option<String>,
    /// Number of scenes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Requested TV speed in m/s (random in [8, 16] when absent).
    #[arg(long)]
    pub speed: Option<f64>,
    /// Standard deviation of the lateral history noise, metres.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, required = true)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// smooth, double, ripple or all.
    #[arg(long)]
    pub attack: Option<String>,
    /// Onset distance ahead of the TV, metres.
    #[arg(long)]
    pub b: Option<f64>,
    /// Override the family's amplitude (curvature for smooth, metres otherwise).
    #[arg(long)]
    pub amplitude: Option<f64>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// ca, ca-sd or external:<command>.
    #[arg(long)]
    pub model: Option<String>,
    /// greedy_sampling, lane_scoring, kmeans, uniform, privileged or all.
    #[arg(long)]
    pub agg: Option<String>,
    /// Number of output trajectories, or `all`.
    #[arg(long)]
    pub khat: Option<String>,
    /// Centerline prior: uniform, scorer or privileged.
    #[arg(long)]
    pub prior: Option<String>,
    /// Endpoint suppression radius for greedy selection, metres.
    #[arg(long)]
    pub nms_radius: Option<f64>,
    /// Lane-scorer model file.
    #[arg(long)]
    pub scorer: Option<PathBuf>,
    /// Trajectories requested per frame.
    #[arg(long)]
    pub k: Option<usize>,
    /// Seconds to wait for an external predictor's answer.
    #[arg(long)]
    pub timeout: Option<f64>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub scenes: PathBuf,
    pub predictions: PathBuf,
    /// Directory for `report.json`, `report.csv` and the manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Keep one row per attack direction instead of the worse of both.
    #[arg(long)]
    pub per_direction: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub input: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// adam or momentum.
    #[arg(long)]
    pub optimizer: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// A scene file or a corpus directory.
    pub input: PathBuf,
    /// Directory of prediction files to overlay.
    #[arg(long)]
    pub preds: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LoopbackArgs {
    /// no-handshake, drop-trajectory, bad-probs, silent or garbage.
    #[arg(long)]
    pub fault: Option<String>,
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let jobs = config.resolve(cli.common.jobs, "jobs", 0usize)?;
    let seed = config.resolve(cli.common.seed, "seed", 0u64)?;
    let ctx = commands::Context { config, seed };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(|| match cli.command {
        Command::Generate(a) => commands::generate(&ctx, a),
        Command::Perturb(a) => commands::perturb(&ctx, a),
        Command::Predict(a) => commands::predict(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::TrainScorer(a) => commands::train_scorer(&ctx, a),
        Command::ExportFrenet(a) => commands::export_frenet(&ctx, a),
        Command::Plot(a) => commands::plot(&ctx, a),
        Command::LoopbackPredictor(a) => commands::loopback(a),
    })
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
