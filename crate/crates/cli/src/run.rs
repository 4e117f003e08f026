use std::io;
use std::time::Instant;

use hesort::select::percentile_rank;
use hesort::{
    block_merge, block_split, multi_rank, multi_rank_corrected, multi_sort, order_statistic_value, plain,
    rank, rank_corrected, sort, CostReport, HeParams, KernelConfig, KernelMode, Simulator, SortConfig,
    StatKind, StatisticQuery,
};

use crate::input::{self, Scale};
use crate::report::{self, CostRow};
use crate::{CliError, KernelArgs, Mode, RunArgs, StatArg};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    Rank,
    Sort { unoptimized: bool },
    Stat(StatKind),
}

impl Task {
    fn name(&self) -> &'static str {
        match self {
            Task::Rank => "rank",
            Task::Sort { .. } => "sort",
            Task::Stat(StatKind::Kth(_)) => "kth",
            Task::Stat(StatKind::Min) => "min",
            Task::Stat(StatKind::Max) => "max",
            Task::Stat(StatKind::Median) => "median",
            Task::Stat(StatKind::Percentile(_)) => "percentile",
        }
    }

    fn uses_strict_comparison(&self) -> bool {
        matches!(
            self,
            Task::Stat(StatKind::Min | StatKind::Max | StatKind::Percentile(0.0 | 100.0))
        )
    }
}

pub fn stat_task(stat: StatArg, k: Option<usize>, p: Option<f64>) -> Result<Task, CliError> {
    let kind = match stat {
        StatArg::Kth => StatKind::Kth(k.ok_or_else(|| CliError::Usage("--stat kth needs --k".into()))?),
        StatArg::Min => StatKind::Min,
        StatArg::Max => StatKind::Max,
        StatArg::Median => StatKind::Median,
        StatArg::Percentile => {
            let p = p.ok_or_else(|| CliError::Usage("--stat percentile needs --p".into()))?;
            if !(0.0..=100.0).contains(&p) {
                return Err(CliError::Usage(format!("--p must lie in [0, 100], got {p}")));
            }
            StatKind::Percentile(p)
        }
    };
    Ok(Task::Stat(kind))
}

/// Kernel configuration for scaled inputs in `[0, 1]`.
pub fn kernel_config(args: &KernelArgs, n: usize, strict: bool) -> Result<KernelConfig, CliError> {
    if args.cmp_degree < 1 || args.ind_degree < 1 {
        return Err(CliError::Usage("degrees must be at least 1".into()));
    }
    let mut cfg = match args.mode {
        Mode::Ideal => KernelConfig {
            cmp_degree: args.cmp_degree,
            ind_degree: args.ind_degree,
            ..KernelConfig::ideal()
        },
        Mode::Chebyshev => KernelConfig::chebyshev(args.cmp_degree, args.ind_degree),
    };
    cfg.goldschmidt_iters = args.goldschmidt_iters;
    match args.min_gap {
        Some(g) if !(g > 0.0 && g.is_finite()) => {
            return Err(CliError::Usage(format!("--min-gap must be positive, got {g}")));
        }
        Some(g) => cfg = cfg.with_min_gap(g),
        // strict comparisons need some margin off the step; assume the
        // inputs are spread about evenly
        None if strict && cfg.mode == KernelMode::Chebyshev => cfg = cfg.with_min_gap(1.0 / n as f64),
        None => {}
    }
    Ok(cfg)
}

pub fn default_slots(n: usize) -> usize {
    n.next_power_of_two().pow(2).max(4)
}

pub fn simulator(slots: usize, max_level: u32, sigma: f64, seed: u64) -> Result<Simulator, CliError> {
    let params = HeParams::new(slots, max_level)?.with_noise(sigma).with_seed(seed);
    Ok(Simulator::new(params)?)
}

pub struct Outcome {
    /// Results in the units the user sees (ranks, or unscaled values).
    pub values: Vec<f64>,
    /// The same results in the scaled domain, for oracle comparison.
    pub scaled: Vec<f64>,
    pub blocks: usize,
}

/// Runs `task` on scaled inputs.
pub fn pipeline(
    sim: &Simulator,
    task: Task,
    v: &[f64],
    cfg: &KernelConfig,
    tie_correction: bool,
) -> Result<Outcome, CliError> {
    let n = v.len();
    let fits = n.next_power_of_two().pow(2) <= sim.slot_count();
    let (scaled, blocks) = match task {
        Task::Rank if fits => {
            let ct = sim.encrypt(v)?;
            let r = if tie_correction {
                rank_corrected(sim, &ct, n, cfg)?
            } else {
                rank(sim, &ct, n, cfg)?
            };
            (sim.decrypt(&r.ranks)[..n].to_vec(), 1)
        }
        Task::Rank => {
            let bv = block_split(sim, v)?;
            let r = if tie_correction {
                multi_rank_corrected(sim, &bv, cfg)?
            } else {
                multi_rank(sim, &bv, cfg)?
            };
            (block_merge(sim, &r), bv.block_count())
        }
        Task::Sort { unoptimized } => {
            let sc = SortConfig::new(*cfg)
                .with_tie_correction(tie_correction)
                .with_optimized_layout(!unoptimized);
            if fits {
                let ct = sim.encrypt(v)?;
                (sim.decrypt(&sort(sim, &ct, n, &sc)?)[..n].to_vec(), 1)
            } else {
                let bv = block_split(sim, v)?;
                (block_merge(sim, &multi_sort(sim, &bv, &sc)?), bv.block_count())
            }
        }
        Task::Stat(kind) => {
            let ct = sim.encrypt(v)?;
            let q = StatisticQuery::new(kind).with_tie_correction(tie_correction);
            (
                vec![sim.decrypt(&order_statistic_value(sim, &ct, n, &q, cfg)?)[0]],
                1,
            )
        }
    };
    Ok(Outcome {
        values: scaled.clone(),
        scaled,
        blocks,
    })
}

/// Plaintext answer in the scaled domain.
pub fn oracle(task: Task, v: &[f64], tie_correction: bool) -> Result<Vec<f64>, CliError> {
    let n = v.len();
    let kth = |k: usize| -> f64 {
        if tie_correction {
            plain::kth_smallest(v, k).unwrap_or(0.0)
        } else {
            // mean of the elements holding fractional rank k, 0 if none
            let ranks = plain::fractional_ranks(v);
            let hits: Vec<f64> = v
                .iter()
                .zip(&ranks)
                .filter(|(_, &r)| r == k as f64)
                .map(|(&x, _)| x)
                .collect();
            if hits.is_empty() {
                0.0
            } else {
                hits.iter().sum::<f64>() / hits.len() as f64
            }
        }
    };
    let min = || v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = || v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(match task {
        Task::Rank if tie_correction => plain::corrected_ranks(v),
        Task::Rank => plain::fractional_ranks(v),
        Task::Sort { .. } => plain::sorted(v),
        Task::Stat(StatKind::Kth(k)) => {
            if k < 1 || k > n {
                return Err(CliError::Usage(format!("--k must lie in [1, {n}], got {k}")));
            }
            vec![kth(k)]
        }
        Task::Stat(StatKind::Min) | Task::Stat(StatKind::Percentile(0.0)) => vec![min()],
        Task::Stat(StatKind::Max) | Task::Stat(StatKind::Percentile(100.0)) => vec![max()],
        Task::Stat(StatKind::Median) => vec![plain::median(v).unwrap_or(0.0)],
        Task::Stat(StatKind::Percentile(p)) => vec![kth(percentile_rank(p, n)?)],
    })
}

pub fn execute(args: &RunArgs, task: Task) -> Result<(), CliError> {
    let raw = input::load(&args.input)?;
    let n = raw.len();
    let scale = Scale::fit(&raw);
    let v: Vec<f64> = raw.iter().map(|&x| scale.forward(x)).collect();
    let tie_correction = args.tie_correction.unwrap_or(task != Task::Rank);
    let cfg = kernel_config(&args.kernel, n, task.uses_strict_comparison())?;
    let slots = args.he.slot_count.unwrap_or_else(|| default_slots(n));
    let sim = simulator(slots, args.he.max_level, args.he.noise_sigma, args.input.seed)?;
    let want = oracle(task, &v, tie_correction)?;

    let start = Instant::now();
    let mut out = pipeline(&sim, task, &v, &cfg, tie_correction)?;
    let wall_ms = if args.timing {
        start.elapsed().as_millis()
    } else {
        0
    };
    let cost: CostReport = sim.cost_snapshot();

    // ranks are unitless; values go back to input units
    let unit = if task == Task::Rank {
        1.0
    } else {
        scale.backward(1.0) - scale.backward(0.0)
    };
    if task != Task::Rank {
        out.values = out.scaled.iter().map(|&y| scale.backward(y)).collect();
    }
    let (avg_err, max_err) = plain::abs_errors(&out.scaled, &want);
    let (avg_err, max_err) = (avg_err * unit, max_err * unit);

    let row = CostRow {
        task: task.name().into(),
        n,
        mode: args.kernel.mode.to_string(),
        cmp_degree: cfg.cmp_degree,
        ind_degree: cfg.ind_degree,
        cost,
        avg_err,
        max_err,
        wall_ms,
    };
    let comments = vec![
        format!("# hesort {}", task.name()),
        scale.describe(),
        format!(
            "# slots={slots} max_level={} noise_sigma={} blocks={} tie_correction={tie_correction}",
            args.he.max_level,
            input::fmt_num(args.he.noise_sigma),
            out.blocks
        ),
    ];
    report::emit(
        args.output.as_deref(),
        &report::values_line(&out.values),
        &mut io::stdout(),
    )?;
    report::emit(
        args.report.as_deref(),
        &report::render(&comments, &[row])?,
        &mut io::stderr(),
    )?;

    if args.kernel.mode == Mode::Ideal && sim.is_exact() {
        // exact up to the division, whose error Goldschmidt bounds
        let tol = if matches!(task, Task::Stat(_)) { 1e-6 } else { 0.0 };
        let worst = plain::abs_errors(&out.scaled, &want).1;
        if worst > tol {
            return Err(CliError::Oracle(format!(
                "{} deviates from the plaintext result by {worst:e}",
                task.name()
            )));
        }
    }
    Ok(())
}
