use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mse", version, about = "Multiple systems estimation with loglinear models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count (and optionally list) the hierarchical models on t lists.
    Enumerate(EnumerateArgs),
    /// Print a dataset in the canonical aggregated layout.
    Data(DataArgs),
    /// Fit one model, or select the BIC-best model of the space.
    Fit(FitArgs),
    /// Bootstrap confidence intervals for the population size.
    Bootstrap(BootstrapArgs),
    /// Stability of the BIC ranking under resampling.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleSizeArg {
    /// Number of observed cases.
    Case,
    /// Number of capture histories, 2^t - 1.
    Capture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Exhaustive BIC over the top n_top models by BIC.
    Bic,
    /// As `bic`, ordering candidates by BIC rank of degree 2.
    Degree2,
    /// Greedy search from the null model (and optional random starts).
    Downhill,
    /// Minimum chi-squared per degree of freedom within a p-value window.
    Chisq,
}

/// `n_top`: a positive integer or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NTop {
    All,
    Top(usize),
}

impl NTop {
    pub fn as_option(self) -> Option<usize> {
        match self {
            NTop::All => None,
            NTop::Top(n) => Some(n),
        }
    }
}

impl FromStr for NTop {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") || s == "inf" {
            return Ok(NTop::All);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("expected a positive integer or \"all\", got {s:?}")),
            Ok(n) => Ok(NTop::Top(n)),
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataSource {
    /// CSV file, or `@name` for a bundled fixture (`@korea`, `@table1_n1` .. `@table1_n4`).
    #[arg(long)]
    pub data: String,
    /// Comma-separated list columns to keep, in order. Defaults to all.
    #[arg(long, value_delimiter = ',')]
    pub lists: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Largest interaction order; defaults to t - 1.
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Sample size used in the BIC penalty.
    #[arg(long, value_enum)]
    pub sample_size: Option<SampleSizeArg>,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    /// Number of lists t.
    #[arg(long)]
    pub lists: usize,
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Print every model, not just the count.
    #[arg(long)]
    pub models: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[command(flatten)]
    pub model_args: ModelArgs,
    /// Model in bracket notation such as "[12,23]", or `best`.
    #[arg(long, default_value = "best")]
    pub model: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Include wall-clock time in the JSON output (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Bic)]
    pub method: MethodArg,
    /// Number of top-ranked models to reselect among (`bic`, `degree2`).
    #[arg(long)]
    pub ntop: Option<NTop>,
    /// Report every n_top from 1 up to --ntop (`bic`, `degree2`).
    #[arg(long)]
    pub sweep: bool,
    /// Two-sided confidence levels.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.95")]
    pub levels: Vec<f64>,
    /// Lower end of the p-value window (`chisq`).
    #[arg(long)]
    pub p_lo: Option<f64>,
    /// Upper end of the p-value window (`chisq`).
    #[arg(long)]
    pub p_hi: Option<f64>,
    /// Random order-2 starting models besides the null model (`downhill`).
    #[arg(long)]
    pub starts: Option<usize>,
    /// Pairs of lists in each random start (`downhill`); defaults to t.
    #[arg(long)]
    pub start_pairs: Option<usize>,
    /// Count bootstrap estimates equal to the point estimate as half below.
    #[arg(long)]
    pub half_ties: bool,
    #[command(flatten)]
    pub resample: ResampleArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[command(flatten)]
    pub model_args: ModelArgs,
    /// n_top values for the containment counts.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,50,100")]
    pub grid: Vec<usize>,
    /// Which table `--format csv` writes.
    #[arg(long, value_enum, default_value_t = DiagnoseTable::Containment)]
    pub table: DiagnoseTable,
    #[command(flatten)]
    pub resample: ResampleArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiagnoseTable {
    /// One row per grid value.
    Containment,
    /// One row per replicate: ρ, m1, m2.
    Replicates,
}
