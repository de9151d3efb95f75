//! The command-line surface: one subcommand per analysis. Doc comments on
//! the fields below are the `--help` text.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use evalplan_core::{planner, timedelay};

/// Plot-ready statistics for planning and auditing malware-detector
/// evaluations.
#[derive(Debug, Parser)]
#[command(name = "evalplan", version, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smallest sample size whose rate estimate lands in a tolerance
    /// window with the requested confidence.
    Plan(PlanArgs),
    /// Underestimation skew and severe-miss probability of the plug-in
    /// estimate k/n.
    Bias(BiasArgs),
    /// ROC curve of a scored sample set, with an optional subsampling
    /// optimism experiment.
    Roc(RocArgs),
    /// Recombine per-category rates under deployment weight profiles.
    Aggregate(AggregateArgs),
    /// Time-delay evaluation protocol over a sample manifest.
    Timedelay(TimedelayArgs),
}

/// Figure presets bundling a rate grid with a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlanPreset {
    /// Rare benign rates: 25 log-spaced points on 1e-5..1e-3 at relative
    /// half-width 0.5.
    Fig1a,
    /// Detection-rate band: 10 linear points on 0.5..0.95 at relative
    /// half-width 0.01.
    Fig1b,
}

/// Sample-size ladder preset for bias tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BiasPreset {
    /// n in {30, 100, 300, 1000, 3000}. The ladder is this tool's choice
    /// of typical published evaluation sizes.
    Fig2,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("rate").args(["p", "p_grid", "preset"]).required(true)))]
#[command(group(ArgGroup::new("tolerance").args(["alpha", "sigma", "preset"]).required(true)))]
pub struct PlanArgs {
    /// True rate to plan for.
    #[arg(long)]
    pub p: Option<f64>,
    /// Rate grid, LO:HI:logN or LO:HI:linN (endpoints included exactly).
    #[arg(long, value_name = "LO:HI:SCALEN")]
    pub p_grid: Option<String>,
    /// Relative half-width: the window is (p - ALPHA*p, p + ALPHA*p).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Absolute half-width: the window is (p - SIGMA, p + SIGMA).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Required probability of the estimate landing in the window.
    #[arg(long, default_value_t = 0.95)]
    pub c: f64,
    /// Largest sample size considered before giving up.
    #[arg(long, default_value_t = planner::DEFAULT_N_MAX)]
    pub n_max: u64,
    /// Also require coverage to hold at the next W sizes, skipping the
    /// sawtooth dips that can follow the first crossing.
    #[arg(long, value_name = "W", default_value_t = 0)]
    pub stable_window: u64,
    /// Preset providing the rate grid and tolerance.
    #[arg(long, value_enum)]
    pub preset: Option<PlanPreset>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("rate").args(["p", "p_grid"])))]
pub struct BiasArgs {
    /// True rate.
    #[arg(long)]
    pub p: Option<f64>,
    /// Rate grid, LO:HI:logN or LO:HI:linN (endpoints included exactly).
    #[arg(long, value_name = "LO:HI:SCALEN")]
    pub p_grid: Option<String>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
    pub n: Vec<u64>,
    /// A miss is severe when the estimate falls below (1 - FRACTION) * p.
    #[arg(long, value_name = "FRACTION", default_value_t = 0.5)]
    pub fraction: f64,
    /// Preset providing the sample-size ladder; the rate grid defaults to
    /// 1e-4:0.5:log25 when neither --p nor --p-grid is given.
    #[arg(long, value_enum)]
    pub preset: Option<BiasPreset>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").args(["scores", "synthetic"]).required(true)))]
pub struct RocArgs {
    /// Scored sample CSV: sample_id,label,score, optionally followed by
    /// category and first_seen columns.
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
    /// Score a synthetic detector instead of reading a file: benign
    /// scores are standard normal, malicious scores sit SEPARATION higher.
    #[arg(long, requires = "separation")]
    pub synthetic: bool,
    /// Distance between the synthetic class means.
    #[arg(long, requires = "synthetic")]
    pub separation: Option<f64>,
    /// Per-class sample count for --synthetic.
    #[arg(long, requires = "synthetic", conflicts_with_all = ["n_pos", "n_neg"])]
    pub n: Option<u64>,
    /// Malicious sample count for --synthetic.
    #[arg(long, requires = "n_neg")]
    pub n_pos: Option<u64>,
    /// Benign sample count for --synthetic.
    #[arg(long, requires = "synthetic", requires = "n_pos")]
    pub n_neg: Option<u64>,
    /// Seed for synthesis and subsampling; equal seeds give bit-equal
    /// output.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Benign size of each subsample trial. Giving --sub-neg and
    /// --sub-pos switches the output to the optimism report.
    #[arg(long, requires = "sub_pos")]
    pub sub_neg: Option<u64>,
    /// Malicious size of each subsample trial.
    #[arg(long, requires = "sub_neg")]
    pub sub_pos: Option<u64>,
    /// FPR budgets the curves are read off at, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.001")]
    pub targets: Vec<f64>,
    /// Number of subsample trials.
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    /// Also write the curve CSV here when the report occupies stdout.
    #[arg(long, value_name = "FILE")]
    pub curve_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Category stats CSV: category,class,n,detected, optionally followed
    /// by a rate column that is cross-checked.
    #[arg(long, value_name = "FILE")]
    pub stats: PathBuf,
    /// Weight profile TOML; repeat the flag to compare several profiles.
    #[arg(long = "profile", value_name = "FILE", required = true)]
    pub profiles: Vec<PathBuf>,
    /// Rescale weight maps that do not sum to 1 instead of rejecting them.
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TimedelayArgs {
    /// Sample manifest CSV:
    /// sample_id,label,first_seen,label_date,category,score.
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Date the evaluated product snapshot was frozen (YYYY-MM-DD).
    #[arg(long)]
    pub freeze: NaiveDate,
    /// Days the frozen snapshot sits idle before collection starts.
    #[arg(long, default_value_t = timedelay::DEFAULT_LAG_DAYS)]
    pub lag: u32,
    /// Collection window length in days after the lag expires.
    #[arg(long)]
    pub window: u32,
    /// Days a label must have had to settle; 0 trusts every label.
    #[arg(long, default_value_t = timedelay::DEFAULT_LABEL_MATURITY_DAYS)]
    pub maturity: u32,
    /// Decision threshold: score >= THRESHOLD flags a sample malicious.
    #[arg(long)]
    pub threshold: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Where and how tabular data is written.
#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Encoding of the data stream.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Write data here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// CSV and JSON carry identical fields in identical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}
