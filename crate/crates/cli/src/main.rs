//! Command-line workflows: generate benchmarks, fit the model, predict,
//! evaluate, cross-validate and regenerate the benchmark table.

mod commands;
mod manifest;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mtcov", version, about = "Overlapping community detection in \
attributed multilayer networks", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark (edge list, attributes, ground truth)
    Generate(GenerateArgs),
    /// Fit model parameters to an edge list and optional attributes
    Fit(FitArgs),
    /// Score held-out triples and predict node attributes from a fit
    Predict(PredictArgs),
    /// Evaluate a fit against ground truth or a holdout mask
    Evaluate(EvaluateArgs),
    /// Draw a train/test holdout mask (uniform or biased edge sampling)
    Holdout(HoldoutArgs),
    /// Grid-search (C, gamma) with k-fold cross-validation
    Cv(CvArgs),
    /// Regenerate the synthetic benchmark table
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Benchmark preset: G1, G2 or G3
    #[arg(long, conflicts_with = "spec_file")]
    pub preset: Option<String>,
    /// Custom benchmark description (JSON)
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    /// Number of nodes
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Fraction of nodes whose category matches their community
    #[arg(long = "match", default_value_t = 0.5)]
    pub matching: f64,
    /// Number of attribute categories (defaults to the community count)
    #[arg(long)]
    pub categories: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long)]
    pub edges: PathBuf,
    /// Attribute CSV (first column node id); required when gamma > 0
    #[arg(long)]
    pub attributes: Option<PathBuf>,
    /// Attribute column name(s), comma separated for a cross-product;
    /// defaults to all columns after the id
    #[arg(long)]
    pub attribute: Option<String>,
    #[arg(long = "communities", short = 'c')]
    pub communities: usize,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Holdout mask JSON; held-out entries are excluded from training
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Treat the edge list as undirected (each row becomes two arcs)
    #[arg(long)]
    pub undirected: bool,
    /// Tie incoming and outgoing memberships (u = v)
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long, default_value_t = 1e-2)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    /// Likelihood rescaling coefficients (JSON)
    #[arg(long)]
    pub rescale_coefficients: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Directory holding a saved fit (u.csv, v.csv, w_layer*.csv, beta.csv)
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub edges: PathBuf,
    /// Mask naming the triples to score
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Directory holding a saved fit
    #[arg(long)]
    pub params: PathBuf,
    /// Ground-truth JSON from `generate`
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Holdout mask JSON for AUC / accuracy evaluation
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Edge list (required with --mask)
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub attributes: Option<PathBuf>,
    #[arg(long)]
    pub attribute: Option<String>,
    /// Membership threshold for the overlapping entropy partition
    #[arg(long, default_value_t = 0.0)]
    pub entropy_threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct HoldoutArgs {
    #[arg(long)]
    pub edges: PathBuf,
    /// Fraction of all N*N*L triples to hold out
    #[arg(long, default_value_t = 0.2)]
    pub holdout_fraction: f64,
    /// Biased edge sampling: total probability mass on edges per draw;
    /// without it triples and attribute rows are held out uniformly
    #[arg(long)]
    pub tpe: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CvArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub attributes: Option<PathBuf>,
    #[arg(long)]
    pub attribute: Option<String>,
    /// Community counts to try
    #[arg(long = "c-grid", value_delimiter = ',', required = true)]
    pub c_grid: Vec<usize>,
    /// Gamma values to try
    #[arg(long = "gamma-grid", value_delimiter = ',', required = true)]
    pub gamma_grid: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Biased edge sampling: total probability mass on edges per draw
    #[arg(long)]
    pub tpe: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub rescale_coefficients: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct BenchmarkArgs {
    /// Presets to run
    #[arg(long, value_delimiter = ',', default_values_t = vec!["G1".to_string(), "G2".to_string(), "G3".to_string()])]
    pub presets: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Attribute match fractions; gamma is fixed to the match per run
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.3, 0.5, 0.7, 0.9])]
    pub matches: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> Result<()> {
    if let Ok(threads) = std::env::var("MTCOV_THREADS") {
        let threads: usize = threads
            .parse()
            .map_err(|_| anyhow::anyhow!("MTCOV_THREADS must be an integer"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let cli = Cli::parse();
    match &cli.command {
        Command::Generate(args) => commands::cmd_generate(args),
        Command::Fit(args) => commands::cmd_fit(args),
        Command::Predict(args) => commands::cmd_predict(args),
        Command::Evaluate(args) => commands::cmd_evaluate(args),
        Command::Holdout(args) => commands::cmd_holdout(args),
        Command::Cv(args) => commands::cmd_cv(args),
        Command::Benchmark(args) => commands::cmd_benchmark(args),
    }
}
