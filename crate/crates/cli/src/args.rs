use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rcp",
    version,
    about = "Randomized CP decomposition of dense tensors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic tensor file (and optionally its ground truth).
    Synth(SynthArgs),
    /// Fit a CP model to a tensor file.
    Decompose(DecomposeArgs),
    /// Expand a model file into a dense tensor file.
    Reconstruct(ReconstructArgs),
    /// Compare the closed-form compression error bound with sampled residuals.
    Bound(BoundArgs),
    /// Time matched deterministic/randomized runs.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Als,
    Bcd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Als => "als",
            Method::Bcd => "bcd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Init {
    Eigen,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Lu,
    Qr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Distribution {
    Gaussian,
    Uniform,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Extents, e.g. 100,100,100. For --toy-video: GRID,GRID,FRAMES.
    #[arg(long, value_delimiter = ',')]
    pub shape: Option<Vec<usize>>,
    /// CP rank of the random ground truth.
    #[arg(long, conflicts_with = "toy_video")]
    pub rank: Option<usize>,
    /// Add white noise at this signal-to-noise ratio (std of signal over std of noise).
    #[arg(long)]
    pub snr: Option<f64>,
    /// Four oscillating spots instead of a random low-rank tensor.
    #[arg(long)]
    pub toy_video: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the noise-free ground-truth model.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also dump the tensor as index,value CSV.
    #[arg(long)]
    pub csv_export: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, value_enum, default_value = "als")]
    pub method: Method,
    /// Fit the full tensor without compression.
    #[arg(long, conflicts_with_all = ["oversample", "power_iters", "modes", "scheme", "distribution"])]
    pub deterministic: bool,
    #[arg(long)]
    pub oversample: Option<usize>,
    #[arg(long)]
    pub power_iters: Option<usize>,
    /// One-based modes to compress (default: all).
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-iteration fit trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "eigen")]
    pub init: Init,
    /// Re-orthonormalization between power iterations.
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    /// Sketch matrix entries.
    #[arg(long, value_enum)]
    pub distribution: Option<Distribution>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,50,50")]
    pub shape: Vec<usize>,
    /// CP rank of the random test tensor.
    #[arg(long, default_value_t = 25)]
    pub rank: usize,
    /// Target ranks to evaluate.
    #[arg(
        long = "k",
        value_delimiter = ',',
        default_value = "5,10,15,20,25,30,35,40,45"
    )]
    pub ks: Vec<usize>,
    #[arg(long = "oversample", default_value_t = 2)]
    pub p: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Shapes separated by ';', e.g. 100,100,100;200,200,200.
    #[arg(long, value_delimiter = ';', required = true)]
    pub shapes: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ranks: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "als,bcd")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 10)]
    pub oversample: usize,
    #[arg(long, default_value_t = 2)]
    pub power_iters: usize,
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of data seeds per configuration, starting at --seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Report the median of three timed runs.
    #[arg(long)]
    pub repeat: bool,
    /// Run configurations concurrently (timings become unreliable).
    #[arg(long)]
    pub parallel: bool,
    /// CSV destination (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
