mod bench;
mod input;
mod report;
mod run;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Rank, sort and select over a simulated SIMD homomorphic scheme.
#[derive(Parser, Debug)]
#[command(name = "hesort", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fractional ranks (optionally tie-corrected) of the input.
    Rank(RunArgs),
    /// Ascending sort of the input.
    Sort {
        #[command(flatten)]
        run: RunArgs,
        /// Use the row-form ranking with a final transposition.
        #[arg(long)]
        unoptimized: bool,
    },
    /// A single order statistic.
    Stat {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        stat: StatArg,
        /// Rank for `--stat kth`, 1-based.
        #[arg(long)]
        k: Option<usize>,
        /// Percentile in [0, 100] for `--stat percentile`.
        #[arg(long)]
        p: Option<f64>,
    },
    /// Sweep approximation degrees and report error and cost per degree.
    Bench(bench::BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Ideal,
    Chebyshev,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ideal => "ideal",
            Mode::Chebyshev => "chebyshev",
        })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatArg {
    Kth,
    Min,
    Max,
    Median,
    Percentile,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    Uniform,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// CSV file: one value per line or a single comma-separated line.
    #[arg(long, conflicts_with = "generator")]
    pub input: Option<PathBuf>,
    /// Generate the input instead of reading it.
    #[arg(long = "gen", value_enum)]
    pub generator: Option<Generator>,
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability that a generated element repeats an earlier one.
    #[arg(long, default_value_t = 0.0)]
    pub tie_fraction: f64,
    /// Generator interval as `lo,hi`.
    #[arg(long, default_value = "0,1", value_parser = input::parse_range)]
    pub gen_range: (f64, f64),
}

#[derive(Args, Debug, Clone)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = Mode::Ideal)]
    pub mode: Mode,
    #[arg(long, default_value_t = 255)]
    pub cmp_degree: usize,
    #[arg(long, default_value_t = 255)]
    pub ind_degree: usize,
    /// Declared minimum gap between distinct (scaled) inputs; sets the
    /// tie margin to half of it.
    #[arg(long)]
    pub min_gap: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub goldschmidt_iters: u32,
}

#[derive(Args, Debug, Clone)]
pub struct HeArgs {
    /// Power of two; defaults to the smallest square layout that fits.
    #[arg(long)]
    pub slot_count: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub max_level: u32,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub he: HeArgs,
    /// Apply the tie-correction offset. Defaults to off for `rank` and on
    /// for `sort` and `stat`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub tie_correction: Option<bool>,
    /// Results file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Cost-report CSV; stderr when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Record wall-clock time (otherwise reported as 0 so reruns are
    /// byte-identical).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Core(hesort::Error),
    Oracle(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Core(e) => match e {
                hesort::Error::Parameter(_) => 2,
                hesort::Error::Capacity { .. } => 3,
                hesort::Error::DepthExhausted { .. } => 4,
                _ => 1,
            },
            CliError::Oracle(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Core(e @ hesort::Error::DepthExhausted { .. }) => write!(f, "depth-budget error: {e}"),
            CliError::Core(e @ hesort::Error::Capacity { .. }) => write!(f, "capacity error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Oracle(m) => write!(f, "oracle mismatch: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<hesort::Error> for CliError {
    fn from(e: hesort::Error) -> Self {
        CliError::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rank(args) => run::execute(&args, run::Task::Rank),
        Command::Sort { run, unoptimized } => run::execute(&run, run::Task::Sort { unoptimized }),
        Command::Stat { run, stat, k, p } => {
            run::stat_task(stat, k, p).and_then(|task| run::execute(&run, task))
        }
        Command::Bench(args) => bench::execute(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hesort: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
