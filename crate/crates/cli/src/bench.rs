use std::io;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use rayon::prelude::*;

use hesort::{plain, CostReport, StatKind};

use crate::input;
use crate::report::{self, CostRow};
use crate::run::{self, Task};
use crate::{CliError, KernelArgs, Mode};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchTask {
    Rank,
    Sort,
    Min,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = BenchTask::Rank)]
    pub task: BenchTask,
    /// Vector length.
    #[arg(long, default_value_t = 128)]
    pub count: usize,
    /// Comparison degrees to sweep.
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024")]
    pub degrees: Vec<usize>,
    /// Indicator degrees, paired with `--degrees`; defaults to the same list.
    #[arg(long, value_delimiter = ',')]
    pub ind_degrees: Option<Vec<usize>>,
    /// Random vectors per degree.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// First seed; vector `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Chebyshev)]
    pub mode: Mode,
    #[arg(long)]
    pub min_gap: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub goldschmidt_iters: u32,
    #[arg(long, default_value_t = 0.0)]
    pub tie_fraction: f64,
    #[arg(long)]
    pub slot_count: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub max_level: u32,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    /// Report CSV; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

impl BenchTask {
    fn task(self) -> Task {
        match self {
            BenchTask::Rank => Task::Rank,
            BenchTask::Sort => Task::Sort { unoptimized: false },
            BenchTask::Min => Task::Stat(StatKind::Min),
        }
    }

    fn name(self) -> &'static str {
        match self {
            BenchTask::Rank => "rank",
            BenchTask::Sort => "sort",
            BenchTask::Min => "min",
        }
    }
}

struct Sample {
    avg: f64,
    max: f64,
    cost: CostReport,
}

fn one_seed(args: &BenchArgs, kernel: &KernelArgs, seed: u64) -> Result<Sample, CliError> {
    let v = input::generate(args.count, seed, args.tie_fraction, (0.0, 1.0));
    let task = args.task.task();
    let tie_correction = task != Task::Rank;
    let cfg = run::kernel_config(kernel, args.count, task == Task::Stat(StatKind::Min))?;
    let slots = args.slot_count.unwrap_or_else(|| run::default_slots(args.count));
    let sim = run::simulator(slots, args.max_level, args.noise_sigma, seed)?;
    let out = run::pipeline(&sim, task, &v, &cfg, tie_correction)?;
    let want = run::oracle(task, &v, tie_correction)?;
    let (avg, max) = plain::abs_errors(&out.scaled, &want);
    Ok(Sample {
        avg,
        max,
        cost: sim.cost_snapshot(),
    })
}

pub fn execute(args: &BenchArgs) -> Result<(), CliError> {
    input::check_generator(args.count, args.tie_fraction)?;
    if args.seeds == 0 || args.degrees.is_empty() {
        return Err(CliError::Usage("need at least one seed and one degree".into()));
    }
    let ind = args.ind_degrees.clone().unwrap_or_else(|| args.degrees.clone());
    if ind.len() != args.degrees.len() {
        return Err(CliError::Usage(format!(
            "--ind-degrees has {} entries, --degrees has {}",
            ind.len(),
            args.degrees.len()
        )));
    }

    let mut rows = Vec::new();
    for (&d_cmp, &d_ind) in args.degrees.iter().zip(&ind) {
        let kernel = KernelArgs {
            mode: args.mode,
            cmp_degree: d_cmp,
            ind_degree: d_ind,
            min_gap: args.min_gap,
            goldschmidt_iters: args.goldschmidt_iters,
        };
        let start = Instant::now();
        let samples = (0..args.seeds)
            .into_par_iter()
            .map(|i| one_seed(args, &kernel, args.seed + i))
            .collect::<Result<Vec<_>, _>>()?;
        let wall_ms = if args.timing {
            start.elapsed().as_millis()
        } else {
            0
        };
        rows.push(CostRow {
            task: args.task.name().into(),
            n: args.count,
            mode: args.mode.to_string(),
            cmp_degree: d_cmp,
            ind_degree: d_ind,
            cost: samples[0].cost,
            avg_err: samples.iter().map(|s| s.avg).sum::<f64>() / samples.len() as f64,
            max_err: samples.iter().map(|s| s.max).fold(0.0, f64::max),
            wall_ms,
        });
    }

    let mut comments = vec![format!(
        "# hesort bench {}: N={} seeds={} (from {}) tie_fraction={}",
        args.task.name(),
        args.count,
        args.seeds,
        args.seed,
        input::fmt_num(args.tie_fraction)
    )];
    comments.push(trend_line(&rows));
    comments.push(budget_line(args, &rows));
    let text = report::render(&comments, &rows)?;
    report::emit(args.output.as_deref(), &text, &mut io::stdout())
}

/// Whether average error falls (within 10%) as the degree grows.
fn trend_line(rows: &[CostRow]) -> String {
    let mut ordered: Vec<&CostRow> = rows.iter().collect();
    ordered.sort_by_key(|r| (r.cmp_degree, r.ind_degree));
    let holds = ordered
        .windows(2)
        .all(|w| w[1].avg_err <= w[0].avg_err * 1.1 + f64::EPSILON);
    format!(
        "# error trend non-increasing in degree: {}",
        if holds { "yes" } else { "no" }
    )
}

/// Checks every row against the single-ciphertext rotation budget.
fn budget_line(args: &BenchArgs, rows: &[CostRow]) -> String {
    let log_n = args.count.next_power_of_two().trailing_zeros() as u64;
    let single = args.count.next_power_of_two().pow(2) <= args.slot_count.unwrap_or(usize::MAX);
    if !single {
        return "# rotation budget: not checked for multi-ciphertext runs".into();
    }
    let limit = match args.task {
        BenchTask::Rank => 4 * log_n,
        BenchTask::Sort => 6 * log_n,
        BenchTask::Min => return "# rotation budget: none stated for min".into(),
    };
    let worst = rows.iter().map(|r| r.cost.rotations).max().unwrap_or(0);
    let ok = rows
        .iter()
        .all(|r| r.cost.rotations <= limit && r.cost.cmp_evals == 1);
    format!(
        "# rotation budget: at most {worst} rotations (limit {limit}), 1 comparison evaluation per row: {}",
        if ok { "ok" } else { "exceeded" }
    )
}
