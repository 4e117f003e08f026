#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use hesort::matrix::{mask, repl, sum, transpose_vec};
use hesort::rank::{block_comparison, comparison_matrix, default_block_size};
use hesort::select::StatisticQuery;
use hesort::sort::sort_detailed;
use hesort::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !($cond) {
            return Err(format!($($fmt)+));
        }
    };
}

const SIZES: [usize; 6] = [4, 8, 16, 32, 64, 128];

fn sim(slots: usize, levels: u32) -> Simulator {
    Simulator::new(HeParams::new(slots, levels).expect("params")).expect("simulator")
}

fn decrypt_prefix(s: &Simulator, ct: &Ciphertext, len: usize) -> Vec<f64> {
    s.decrypt(ct)[..len].to_vec()
}

fn oracle_exactness() -> Outcome {
    let cfg = KernelConfig::ideal();
    let sort_cfg = SortConfig::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut trials = 0;
    let mut worst_stat = 0.0f64;
    for n in SIZES {
        let s = sim(n * n, 40);
        for t in 0..500 {
            let v = random_vector(&mut rng, n, 0.2);
            let ct = s.encrypt(&v).unwrap();
            let r = rank_corrected(&s, &ct, n, &cfg).map_err(|e| e.to_string())?;
            ensure!(
                decrypt_prefix(&s, &r.ranks, n) == corrected_rank_oracle(&v),
                "N={n} trial {t}: corrected ranks differ from oracle"
            );
            let sorted = sort(&s, &ct, n, &sort_cfg).map_err(|e| e.to_string())?;
            ensure!(
                decrypt_prefix(&s, &sorted, n) == sort_oracle(&v),
                "N={n} trial {t}: sort differs from oracle"
            );
            let k = rng.random_range(1..=n);
            let got = s.decrypt(
                &order_statistic_value(&s, &ct, n, &StatisticQuery::kth(k), &cfg)
                    .map_err(|e| e.to_string())?,
            )[0];
            let err = (got - sort_oracle(&v)[k - 1]).abs();
            worst_stat = worst_stat.max(err);
            ensure!(err <= 1e-6, "N={n} trial {t}: k={k} statistic off by {err:e}");
            trials += 1;
        }
    }
    Ok(format!(
        "{trials} vectors, worst statistic error {worst_stat:.1e}"
    ))
}

fn permutation_invariant() -> Outcome {
    let cfg = KernelConfig::ideal();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    let sizes = SIZES.iter().copied().chain([3, 5, 7, 100]);
    for n in sizes {
        let slots = n.next_power_of_two().pow(2);
        let s = sim(slots, 30);
        let mut inputs: Vec<Vec<f64>> = (0..500).map(|_| random_vector(&mut rng, n, 0.2)).collect();
        inputs.push(vec![0.5; n]);
        inputs.push((0..n).map(|i| f64::from(u8::from(i % 2 == 0))).collect());
        for v in inputs {
            let ct = s.encrypt(&v).unwrap();
            let r = rank_corrected(&s, &ct, n, &cfg).map_err(|e| e.to_string())?;
            let out = decrypt_prefix(&s, &r.ranks, n);
            ensure!(
                is_permutation_of_1_to_n(&out),
                "N={n}: {out:?} is not a permutation for {v:?}"
            );
            checked += 1;
        }
    }
    Ok(format!("{checked} inputs, all-equal included"))
}

fn cost_budgets() -> Outcome {
    let configs = [
        ("ideal", KernelConfig::ideal()),
        ("chebyshev", KernelConfig::chebyshev(127, 255).with_min_gap(0.01)),
        ("chebyshev", KernelConfig::chebyshev(1023, 127).with_min_gap(0.01)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut runs = 0;
    for (name, cfg) in configs {
        let (dc, di) = (u64::from(cfg.cmp_depth()), u64::from(cfg.ind_depth()));
        for n in SIZES.iter().copied().chain([5, 100]) {
            let log = ceil_log2(n);
            let s = sim(n.next_power_of_two().pow(2), 60);
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let ct = s.encrypt(&v).unwrap();
            let tag = format!("{name} N={n}");

            for corrected in [false, true] {
                s.cost_reset();
                if corrected {
                    rank_corrected(&s, &ct, n, &cfg)
                } else {
                    rank(&s, &ct, n, &cfg)
                }
                .map_err(|e| e.to_string())?;
                let c = s.cost_snapshot();
                ensure!(c.cmp_evals == 1, "{tag}: rank used {} comparisons", c.cmp_evals);
                ensure!(
                    c.rotations <= 4 * log,
                    "{tag}: rank used {} rotations",
                    c.rotations
                );
                ensure!(
                    c.levels_consumed <= dc + 4,
                    "{tag}: rank consumed {} levels",
                    c.levels_consumed
                );
            }

            s.cost_reset();
            sort(&s, &ct, n, &SortConfig::new(cfg)).map_err(|e| e.to_string())?;
            let c = s.cost_snapshot();
            ensure!(
                (c.cmp_evals, c.ind_evals) == (1, 1),
                "{tag}: sort kernel counts {c:?}"
            );
            ensure!(
                c.rotations <= 6 * log,
                "{tag}: sort used {} rotations",
                c.rotations
            );
            ensure!(
                c.critical_rotations <= 5 * log,
                "{tag}: sort critical path {} rotations",
                c.critical_rotations
            );
            ensure!(
                c.levels_consumed <= dc + di + 6,
                "{tag}: sort consumed {} levels",
                c.levels_consumed
            );

            for q in [
                StatisticQuery::kth(n.div_ceil(2)),
                StatisticQuery::min(),
                StatisticQuery::max(),
                StatisticQuery::median(),
            ] {
                s.cost_reset();
                order_statistic_mask(&s, &ct, n, &q, &cfg).map_err(|e| e.to_string())?;
                let c = s.cost_snapshot();
                ensure!((c.cmp_evals, c.ind_evals) == (1, 1), "{tag}: {q:?} kernel counts");
                ensure!(
                    c.levels_consumed <= dc + di + 4,
                    "{tag}: {q:?} mask consumed {} levels",
                    c.levels_consumed
                );
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} size/mode combinations within budget"))
}

fn multi_ciphertext() -> Outcome {
    let slots = 1 << 14;
    let b = default_block_size(slots);
    ensure!(b == 128, "block size {b}");
    let cfg = KernelConfig::ideal();
    let sort_cfg = SortConfig::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = sim(slots, 40);
    let mut cases = 0;
    for n in [256, 512] {
        let inputs = [
            random_vector(&mut rng, n, 0.0),
            tied_vector(&mut rng, n),
            (0..n).rev().map(|i| i as f64 / n as f64).collect(),
        ];
        for v in &inputs {
            let bv = block_split(&s, v).map_err(|e| e.to_string())?;
            let l = bv.block_count() as u64;
            ensure!(l == (n / b) as u64, "N={n}: {l} blocks");
            ensure!(block_merge(&s, &bv) == *v, "N={n}: split/merge round trip");

            s.cost_reset();
            let r = multi_rank(&s, &bv, &cfg).map_err(|e| e.to_string())?;
            ensure!(
                s.cost_snapshot().cmp_evals == l * (l + 1) / 2,
                "N={n}: multi_rank used {} comparisons",
                s.cost_snapshot().cmp_evals
            );
            ensure!(
                block_merge(&s, &r) == fractional_rank_oracle(v),
                "N={n}: multi_rank differs"
            );

            let r = multi_rank_corrected(&s, &bv, &cfg).map_err(|e| e.to_string())?;
            ensure!(
                block_merge(&s, &r) == corrected_rank_oracle(v),
                "N={n}: corrected multi_rank differs"
            );

            s.cost_reset();
            let sorted = multi_sort(&s, &bv, &sort_cfg).map_err(|e| e.to_string())?;
            let c = s.cost_snapshot();
            ensure!(
                (c.cmp_evals, c.ind_evals) == (l * (l + 1) / 2, l * l),
                "N={n}: multi_sort kernel counts {c:?}"
            );
            ensure!(
                block_merge(&s, &sorted) == sort_oracle(v),
                "N={n}: multi_sort differs"
            );

            for i in 0..bv.block_count() {
                for j in 0..bv.block_count() {
                    if i == j {
                        continue;
                    }
                    let cij = s.decrypt(&block_comparison(&s, &bv, i, j, &cfg).map_err(|e| e.to_string())?);
                    let cji = s.decrypt(&block_comparison(&s, &bv, j, i, &cfg).map_err(|e| e.to_string())?);
                    for m in 0..b {
                        for q in 0..b {
                            ensure!(
                                cij[m * b + q] + cji[q * b + m] == 1.0,
                                "N={n}: complement identity fails at blocks ({i},{j}) cell ({m},{q})"
                            );
                        }
                    }
                }
            }
            cases += 1;
        }
    }

    // the 256 case also fits a single larger ciphertext
    let big = sim(1 << 16, 40);
    let v = random_vector(&mut rng, 256, 0.5);
    let single = rank(&big, &big.encrypt(&v).unwrap(), 256, &cfg).map_err(|e| e.to_string())?;
    let multi = multi_rank(&s, &block_split(&s, &v).unwrap(), &cfg).map_err(|e| e.to_string())?;
    ensure!(
        block_merge(&s, &multi) == decrypt_prefix(&big, &single.ranks, 256),
        "multi_rank differs from single-ciphertext rank"
    );
    Ok(format!("{cases} vectors over L = 2 and 4, B = {b}"))
}

type Plain = Vec<f64>;

fn brute_force(op: &str, m: &[f64], n: usize) -> Plain {
    let at = |i: usize, j: usize| m[i * n + j];
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = match op {
                "MaskR" => {
                    if i == n / 2 {
                        at(i, j)
                    } else {
                        0.0
                    }
                }
                "MaskC" => {
                    if j == n / 2 {
                        at(i, j)
                    } else {
                        0.0
                    }
                }
                "SumR" => {
                    if i == 0 {
                        (0..n).map(|r| at(r, j)).sum()
                    } else {
                        0.0
                    }
                }
                "SumC" => {
                    if j == 0 {
                        (0..n).map(|c| at(i, c)).sum()
                    } else {
                        0.0
                    }
                }
                "ReplR" => at(0, j),
                "ReplC" => at(i, 0),
                "TransR" => {
                    if j == 0 {
                        at(0, i)
                    } else {
                        0.0
                    }
                }
                "TransC" => {
                    if i == 0 {
                        at(j, 0)
                    } else {
                        0.0
                    }
                }
                _ => unreachable!(),
            };
        }
    }
    out
}

fn building_blocks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ops = [
        "MaskR", "MaskC", "SumR", "SumC", "ReplR", "ReplC", "TransR", "TransC",
    ];
    let mut checks = 0;
    for log in 1..=6u32 {
        let n = 1usize << log;
        let s = sim(n * n, 4);
        let layout = MatrixLayout::new(n, n * n).unwrap();
        for _ in 0..200 {
            // integer entries keep the rotation-tree sums exact
            let full: Vec<f64> = (0..n * n)
                .map(|_| f64::from(rng.random_range(-50i32..=50)))
                .collect();
            for op in ops {
                let input: Vec<f64> = match op {
                    "ReplR" | "TransR" => (0..n * n).map(|k| if k < n { full[k] } else { 0.0 }).collect(),
                    "ReplC" | "TransC" => (0..n * n)
                        .map(|k| if k % n == 0 { full[k] } else { 0.0 })
                        .collect(),
                    _ => full.clone(),
                };
                let x = s.encrypt(&input).unwrap();
                s.cost_reset();
                let y = match op {
                    "MaskR" => mask(&s, &x, &layout, Axis::Row, n / 2),
                    "MaskC" => mask(&s, &x, &layout, Axis::Col, n / 2),
                    "SumR" => sum(&s, &x, &layout, Axis::Row),
                    "SumC" => sum(&s, &x, &layout, Axis::Col),
                    "ReplR" => repl(&s, &x, &layout, Axis::Row),
                    "ReplC" => repl(&s, &x, &layout, Axis::Col),
                    "TransR" => transpose_vec(&s, &x, &layout, Direction::RowToCol),
                    _ => transpose_vec(&s, &x, &layout, Direction::ColToRow),
                }
                .map_err(|e| e.to_string())?;
                let c = s.cost_snapshot();
                ensure!(
                    s.decrypt(&y) == brute_force(op, &input, n),
                    "{op} N={n} differs from oracle"
                );
                let (rot, masks) = match op {
                    "MaskR" | "MaskC" => (0, 1),
                    "ReplR" | "ReplC" => (u64::from(log), 0),
                    _ => (u64::from(log), 1),
                };
                ensure!(
                    c.rotations == rot && c.ctpt_mults == masks,
                    "{op} N={n}: {} rotations, {} masks",
                    c.rotations,
                    c.ctpt_mults
                );
                checks += 1;
            }
        }
    }

    let s = sim(64, 4);
    let layout = MatrixLayout::new(8, 64).unwrap();
    let x = s
        .encrypt(&(0..8).map(|k| k as f64 * 8.0).collect::<Vec<_>>())
        .unwrap();
    s.enable_trace();
    transpose_vec(&s, &x, &layout, Direction::ColToRow).unwrap();
    let offsets: Vec<i64> = s
        .take_trace()
        .into_iter()
        .filter_map(|e| match e {
            TraceEvent::Rotate(k) => Some(k),
            _ => None,
        })
        .collect();
    ensure!(offsets == [28, 14, 7], "TransC N=8 offsets {offsets:?}");
    Ok(format!(
        "{checks} primitive checks, TransC N=8 offsets {offsets:?}"
    ))
}

fn ranking_displacement(degree: usize, seed: u64) -> std::result::Result<f64, String> {
    let n = 128;
    let s = sim(n * n, 30);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let cfg = KernelConfig::chebyshev(degree, degree);
    let r = rank(&s, &s.encrypt(&v).unwrap(), n, &cfg).map_err(|e| e.to_string())?;
    let got = decrypt_prefix(&s, &r.ranks, n);
    let want = fractional_rank_oracle(&v);
    Ok(got.iter().zip(&want).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64)
}

fn approximation_study() -> Outcome {
    let start = Instant::now();
    let degrees = [64, 128, 256, 512, 1024];
    let mut avgs = Vec::new();
    for d in degrees {
        let mut total = 0.0;
        for seed in 0..10 {
            total += ranking_displacement(d, 100 + seed)?;
        }
        avgs.push(total / 10.0);
    }
    let table = degrees
        .iter()
        .zip(&avgs)
        .map(|(d, a)| format!("{d}:{a:.3}"))
        .collect::<Vec<_>>()
        .join(" ");
    for w in avgs.windows(2) {
        ensure!(w[1] <= 1.1 * w[0], "displacement rose: {table}");
    }
    ensure!(avgs[4] <= 0.5, "displacement at degree 1024 above 0.5: {table}");
    ensure!(
        start.elapsed() < Duration::from_secs(300),
        "took {:?}",
        start.elapsed()
    );
    Ok(format!("avg displacement {table}"))
}

fn paterson_stockmeyer() -> Outcome {
    let d = 1024;
    let slots = 4096;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let step = ChebyshevPolynomial::fit(
        |x| {
            if x > 0.0 {
                1.0
            } else if x == 0.0 {
                0.5
            } else {
                0.0
            }
        },
        (-1.0, 1.0),
        d,
    )
    .map_err(|e| e.to_string())?;
    let random = ChebyshevPolynomial::new((0.0, 3.0), (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for (name, p) in [("step", &step), ("random", &random)] {
        let s = sim(slots, 20);
        let (lo, hi) = p.interval();
        let xs: Vec<f64> = (0..slots).map(|_| rng.random_range(lo..=hi)).collect();
        let out = s.decrypt(&ps_eval(&s, &s.encrypt(&xs).unwrap(), p).map_err(|e| e.to_string())?);
        let c = s.cost_snapshot();
        let worst = xs
            .iter()
            .zip(&out)
            .map(|(&x, &y)| (p.eval(x) - y).abs())
            .fold(0.0, f64::max);
        ensure!(
            c.ctct_mults < 80 && c.ctct_mults < (d / 4) as u64,
            "{name}: {} ct-ct mults",
            c.ctct_mults
        );
        ensure!(worst <= 1e-8, "{name}: deviation from Clenshaw {worst:e}");
        report.push(format!("{name}: {} mults, max dev {worst:.1e}", c.ctct_mults));
    }
    Ok(report.join("; "))
}

fn paper_fixtures() -> Outcome {
    let cfg = KernelConfig::ideal();
    let s = sim(16, 40);
    let ct = s.encrypt(&[20.0, 30.0, 10.0, 40.0]).unwrap();
    let r = rank(&s, &ct, 4, &cfg).map_err(|e| e.to_string())?;
    ensure!(
        decrypt_prefix(&s, &r.ranks, 4) == [2.0, 3.0, 1.0, 4.0],
        "rank (20,30,10,40)"
    );

    let figure_mask = [
        0.0, 0.0, 1.0, 0.0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    ];
    for optimized in [false, true] {
        let out = sort_detailed(&s, &ct, 4, &SortConfig::new(cfg).with_optimized_layout(optimized))
            .map_err(|e| e.to_string())?;
        ensure!(
            decrypt_prefix(&s, &out.sorted, 4) == [10.0, 20.0, 30.0, 40.0],
            "sort (20,30,10,40)"
        );
        let m = s.decrypt(&out.mask);
        let oriented: Vec<f64> = if optimized {
            (0..16).map(|k| m[(k % 4) * 4 + k / 4]).collect()
        } else {
            m
        };
        ensure!(
            oriented == figure_mask,
            "sort mask {oriented:?} (optimized={optimized})"
        );
    }

    let ct = s.encrypt(&[10.0, 20.0, 20.0, 40.0]).unwrap();
    let (c, layout) = comparison_matrix(&s, &ct, 4, &cfg).map_err(|e| e.to_string())?;
    let f = tie_offset(&s, &c, &layout, 4).map_err(|e| e.to_string())?;
    ensure!(
        decrypt_prefix(&s, &f, 4) == [0.0, -0.5, 0.5, 0.0],
        "offset for (10,20,20,40)"
    );
    let r = rank_corrected(&s, &ct, 4, &cfg).map_err(|e| e.to_string())?;
    ensure!(
        decrypt_prefix(&s, &r.ranks, 4) == [1.0, 2.0, 3.0, 4.0],
        "corrected (10,20,20,40)"
    );

    let s = sim(64, 40);
    let ct = s.encrypt(&[50.0, 10.0, 20.0, 20.0, 40.0]).unwrap();
    let r = rank(&s, &ct, 5, &cfg).map_err(|e| e.to_string())?;
    ensure!(
        decrypt_prefix(&s, &r.ranks, 5) == [5.0, 1.0, 2.5, 2.5, 4.0],
        "rank (50,10,20,20,40)"
    );
    Ok("rank, sort + mask, offset, corrected and tied ranks".into())
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "oracle exactness",
            oracle_exactness,
            Some(Duration::from_secs(120)),
        ),
        ("permutation invariant", permutation_invariant, None),
        ("cost budgets", cost_budgets, None),
        ("multi-ciphertext", multi_ciphertext, None),
        ("building blocks", building_blocks, None),
        (
            "approximation study",
            approximation_study,
            Some(Duration::from_secs(300)),
        ),
        ("paterson-stockmeyer economy", paterson_stockmeyer, None),
        ("reference fixtures", paper_fixtures, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("exceeded {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!(
                "criterion {} {name}: PASS ({detail}; {:.1}s)",
                i + 1,
                elapsed.as_secs_f64()
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "criterion {} {name}: FAIL ({why}; {:.1}s)",
                    i + 1,
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 8 criteria failed");
        ExitCode::FAILURE
    }
}
