mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netsel_core::reactive::{InfeasiblePolicy, ReactiveError};

/// Input the user can fix: missing files, bad values, inconsistent data.
#[derive(Debug)]
pub struct BadInput(pub String);

impl std::fmt::Display for BadInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for BadInput {}

#[derive(Parser, Debug)]
#[command(name = "netsel", version, about = "Select object-detection networks per image or per stream context")]
pub struct Cli {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel stages
    #[arg(long, global = true, env = "NETSEL_THREADS")]
    pub threads: Option<usize>,
    /// Seed for every random choice [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: netsel-out]
    #[arg(long, short = 'o', global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Log more to stderr (-v info, -vv debug)
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score detection files against ground truth
    Eval(EvalArgs),
    /// Label each image with its best network
    Oracle(OracleArgs),
    /// Accuracy/latency frontier and best configuration per model
    Pareto(ParetoArgs),
    /// Replay a constraint scenario over a frame stream
    Simulate(SimulateArgs),
    /// Extract image descriptors
    Features(FeaturesArgs),
    /// Train and score network predictors
    Train(TrainArgs),
    /// Predict the best network for each feature row
    Predict(PredictArgs),
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// COCO-style ground-truth JSON
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Detection result files or directories of them; the file stem names the network
    #[arg(long, num_args = 1..)]
    pub detections: Vec<PathBuf>,
    /// Profile table supplying latencies; also emits profile rows for the detection sets
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Also write per-image scores
    #[arg(long)]
    pub per_image: bool,
    /// Latency recorded in per-image scores for sets without a profile
    #[arg(long)]
    pub latency_ms: Option<f64>,
    /// Restrict per-image scores to one size bucket (small, medium, large)
    #[arg(long)]
    pub bucket: Option<String>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Per-image score tables
    #[arg(long, num_args = 1..)]
    pub scores: Vec<PathBuf>,
    /// Profile table; when given, only its networks compete
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Also label using only frontier networks under this metric (needs --profiles)
    #[arg(long, value_name = "METRIC")]
    pub restrict_pareto: Option<String>,
}

#[derive(Args, Debug)]
pub struct ParetoArgs {
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// overall, small, medium, large or class:<id>
    #[arg(long, default_value = "overall")]
    pub metric: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PolicyArg {
    FastestFallback,
    Reject,
}

impl From<PolicyArg> for InfeasiblePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::FastestFallback => InfeasiblePolicy::FastestFallback,
            PolicyArg::Reject => InfeasiblePolicy::Reject,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Scenario table: frame,label,max_latency_ms,min_accuracy,objective
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Frames to replay [default: 100]
    #[arg(long)]
    pub frames: Option<u64>,
    /// What to do when no profile satisfies a context [default: fastest-fallback]
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    /// Measured per-frame latencies: frame,latency_ms
    #[arg(long)]
    pub latency_trace: Option<PathBuf>,
    /// Cost charged on frames where the network changes [default: 0]
    #[arg(long)]
    pub switch_cost_ms: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    /// Directory of PNG or BMP images
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Ground truth used to map file names to image ids; otherwise the file stem must be the id
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub edge_fraction: Option<f64>,
    #[arg(long)]
    pub peak_fraction: Option<f64>,
    #[arg(long)]
    pub harris_k: Option<f64>,
    #[arg(long)]
    pub harris_threshold: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Control {
    None,
    /// Shuffle labels across rows
    Shuffled,
    /// Permute feature vectors across rows
    Permuted,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Feature table
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Oracle labels
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Classifiers to train: knn, tree, majority
    #[arg(long, value_delimiter = ',', default_value = "knn,tree,majority")]
    pub kinds: Vec<String>,
    #[arg(long, value_enum, default_value = "none")]
    pub control: Control,
    /// Undersample every label to the minority count
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub balance: Option<bool>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub variance_target: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Saved predictor
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Feature table
    #[arg(long)]
    pub features: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use netsel_core::{evaluation, features, frontier, ingest, oracle, predictor};
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ReactiveError>() {
            return if matches!(e, ReactiveError::Infeasible(_)) { 3 } else { 2 };
        }
        if cause.is::<BadInput>()
            || cause.is::<ingest::IngestError>()
            || cause.is::<ingest::DatasetError>()
            || cause.is::<evaluation::EvalError>()
            || cause.is::<frontier::FrontierError>()
            || cause.is::<oracle::OracleError>()
            || cause.is::<features::FeatureError>()
            || cause.is::<predictor::PredictorError>()
            || cause.is::<image::ImageError>()
            || cause.is::<netsel_core::model::ModelError>()
        {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
