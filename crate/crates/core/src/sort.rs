//! Sorting by extracting every order statistic at once.
//!
//! With ranks replicated across the matrix, subtracting a plaintext that
//! holds `k` along the `k`-th line and applying the indicator of `0`
//! yields a permutation matrix; multiplying by the replicated input and
//! summing moves each element to its sorted position.

use crate::error::{Error, Result, StageExt};
use crate::kernels::{ind_kernel, CmpVariant, KernelConfig};
use crate::matrix::{repl, sum, transpose_vec, Axis, Direction, MatrixLayout};
use crate::rank::{multi_rank_pipeline, par_map, rank_pipeline, BlockVector, Form};
use crate::sim::{Ciphertext, Simulator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortConfig {
    /// Must stay on unless the input is known to hold distinct elements;
    /// duplicates without correction produce wrong output.
    pub tie_correction: bool,
    /// Column-form ranking, which saves the final transposition.
    pub optimized_layout: bool,
    pub kernel: KernelConfig,
}

impl SortConfig {
    pub fn new(kernel: KernelConfig) -> Self {
        SortConfig {
            tie_correction: true,
            optimized_layout: true,
            kernel,
        }
    }

    pub fn with_tie_correction(mut self, on: bool) -> Self {
        self.tie_correction = on;
        self
    }

    pub fn with_optimized_layout(mut self, on: bool) -> Self {
        self.optimized_layout = on;
        self
    }
}

impl Default for SortConfig {
    fn default() -> Self {
        SortConfig::new(KernelConfig::ideal())
    }
}

#[derive(Debug, Clone)]
pub struct SortOutput {
    /// Row 0 holds the sorted vector.
    pub sorted: Ciphertext,
    /// Ranks as produced by the ranking stage: row 0 in the row form,
    /// column 0 in the optimized column form.
    pub ranks: Ciphertext,
    /// Permutation matrix. Entry `(i, j)` is 1 when element `j` holds
    /// rank `i + 1`; the optimized layout produces its transpose.
    pub mask: Ciphertext,
    pub layout: MatrixLayout,
}

/// Indicator kernel config spanning the shifted ranks `[-span, span]`.
fn shifted_range(cfg: &KernelConfig, span: usize) -> KernelConfig {
    let s = span as f64;
    cfg.with_range(-s, s)
}

pub fn sort(sim: &Simulator, v: &Ciphertext, len: usize, cfg: &SortConfig) -> Result<Ciphertext> {
    sort_detailed(sim, v, len, cfg).map(|o| o.sorted)
}

/// [`sort`] that also returns the intermediate ranks and permutation mask.
pub fn sort_detailed(sim: &Simulator, v: &Ciphertext, len: usize, cfg: &SortConfig) -> Result<SortOutput> {
    let form = if cfg.optimized_layout {
        Form::Col
    } else {
        Form::Row
    };
    let ranked = rank_pipeline(
        sim,
        v,
        len,
        &cfg.kernel,
        CmpVariant::Fractional,
        form,
        cfg.tie_correction,
    )?;
    let layout = ranked.layout.clone();
    let ind_cfg = shifted_range(&cfg.kernel, layout.dim());

    let (mask, sorted) = match form {
        Form::Col => {
            // (i, j) -> r_i - (j + 1)
            let spread = repl(sim, &ranked.ranks, &layout, Axis::Col).stage("sort/replicate-ranks")?;
            let shift = layout.plaintext(sim, |_, j| (j + 1) as f64)?;
            let shifted = sim.sub_plain(&spread, &shift)?;
            let mask = ind_kernel(sim, &shifted, -0.5, 0.5, &ind_cfg).stage("sort/indicator")?;
            let picked = sim.mul(&mask, &ranked.v_cols).stage("sort/select")?;
            let sorted = sum(sim, &picked, &layout, Axis::Row).stage("sort/sum")?;
            (mask, sorted)
        }
        Form::Row => {
            // (i, j) -> r_j - (i + 1)
            let spread = repl(sim, &ranked.ranks, &layout, Axis::Row).stage("sort/replicate-ranks")?;
            let shift = layout.plaintext(sim, |i, _| (i + 1) as f64)?;
            let shifted = sim.sub_plain(&spread, &shift)?;
            let mask = ind_kernel(sim, &shifted, -0.5, 0.5, &ind_cfg).stage("sort/indicator")?;
            let picked = sim.mul(&mask, &ranked.v_rows).stage("sort/select")?;
            let col = sum(sim, &picked, &layout, Axis::Col).stage("sort/sum")?;
            let sorted = transpose_vec(sim, &col, &layout, Direction::ColToRow).stage("sort/transpose")?;
            (mask, sorted)
        }
    };
    Ok(SortOutput {
        sorted,
        ranks: ranked.ranks,
        mask,
        layout,
    })
}

/// Block-wise sort: block `i` of the result holds sorted positions
/// `B i + 1 ..= B (i + 1)`. Uses `L^2` indicator evaluations on top of the
/// block ranking. `optimized_layout` has no effect here.
pub fn multi_sort(sim: &Simulator, bv: &BlockVector, cfg: &SortConfig) -> Result<BlockVector> {
    let ranked = multi_rank_pipeline(sim, bv, &cfg.kernel, cfg.tie_correction)?;
    let layout = &ranked.layout;
    let b = bv.block_size;
    let l = bv.block_count();
    let ind_cfg = shifted_range(&cfg.kernel, l * b);

    let spread = par_map(sim, &ranked.ranks, |r| {
        repl(sim, r, layout, Axis::Row).stage("multi-sort/replicate-ranks")
    })?;

    let out_ids: Vec<usize> = (0..l).collect();
    let blocks = par_map(sim, &out_ids, |&i| {
        let shift = layout.plaintext(sim, |m, _| (b * i + m + 1) as f64)?;
        let mut acc: Option<Ciphertext> = None;
        for (spread_j, v_j) in spread.iter().zip(&ranked.v_rows) {
            let shifted = sim.sub_plain(spread_j, &shift)?;
            let mask = ind_kernel(sim, &shifted, -0.5, 0.5, &ind_cfg).stage("multi-sort/indicator")?;
            let picked = sim.mul(&mask, v_j).stage("multi-sort/select")?;
            acc = Some(match acc {
                None => picked,
                Some(a) => sim.add(&a, &picked)?,
            });
        }
        let acc = acc.ok_or_else(|| Error::Parameter("empty block vector".into()))?;
        let col = sum(sim, &acc, layout, Axis::Col).stage("multi-sort/sum")?;
        transpose_vec(sim, &col, layout, Direction::ColToRow).stage("multi-sort/transpose")
    })?;

    Ok(BlockVector {
        blocks,
        block_size: b,
        total_len: bv.total_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::{block_merge, block_split, block_split_with};
    use crate::sim::HeParams;

    fn sim(slots: usize) -> Simulator {
        Simulator::new(HeParams::new(slots, 60).unwrap()).unwrap()
    }

    fn sorted_of(s: &Simulator, v: &[f64], cfg: &SortConfig) -> Vec<f64> {
        let ct = s.encrypt(v).unwrap();
        s.decrypt(&sort(s, &ct, v.len(), cfg).unwrap())[..v.len()].to_vec()
    }

    #[test]
    fn sorts_figure_example_both_layouts() {
        let s = sim(16);
        let v = [20.0, 30.0, 10.0, 40.0];
        for optimized in [true, false] {
            for tie in [true, false] {
                let cfg = SortConfig::default()
                    .with_optimized_layout(optimized)
                    .with_tie_correction(tie);
                assert_eq!(sorted_of(&s, &v, &cfg), vec![10.0, 20.0, 30.0, 40.0]);
            }
        }
    }

    #[test]
    fn figure_mask() {
        let s = sim(16);
        let ct = s.encrypt(&[20.0, 30.0, 10.0, 40.0]).unwrap();
        let cfg = SortConfig::default().with_optimized_layout(false);
        let out = sort_detailed(&s, &ct, 4, &cfg).unwrap();
        let want = [
            0.0, 0.0, 1.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ];
        assert_eq!(s.decrypt(&out.mask), want);

        let out = sort_detailed(&s, &ct, 4, &SortConfig::default()).unwrap();
        let m = s.decrypt(&out.mask);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[i * 4 + j], want[j * 4 + i]);
            }
        }
    }

    #[test]
    fn ties_need_correction() {
        let s = sim(16);
        let v = [20.0, 10.0, 40.0, 20.0];
        assert_eq!(
            sorted_of(&s, &v, &SortConfig::default()),
            vec![10.0, 20.0, 20.0, 40.0]
        );
        let off = SortConfig::default().with_tie_correction(false);
        assert_ne!(sorted_of(&s, &v, &off), vec![10.0, 20.0, 20.0, 40.0]);
    }

    #[test]
    fn padded_lengths() {
        let s = sim(64);
        let v = [0.4, 0.9, 0.1, 0.4, 0.7];
        let out = sorted_of(&s, &v, &SortConfig::default());
        assert_eq!(out, vec![0.1, 0.4, 0.4, 0.7, 0.9]);
        let ct = s.encrypt(&v).unwrap();
        let full = s.decrypt(&sort(&s, &ct, 5, &SortConfig::default()).unwrap());
        assert!(full[5..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn optimized_costs() {
        let s = sim(256);
        let cfg = SortConfig::default();
        let v: Vec<f64> = (0..16).map(|i| f64::from((i * 7) % 16) / 16.0).collect();
        let ct = s.encrypt(&v).unwrap();
        s.cost_reset();
        sort(&s, &ct, 16, &cfg).unwrap();
        let c = s.cost_snapshot();
        assert_eq!((c.cmp_evals, c.ind_evals), (1, 1));
        assert_eq!(c.rotations, 6 * 4);
        assert_eq!(c.critical_rotations, 5 * 4);
        let budget = cfg.kernel.cmp_depth() + cfg.kernel.ind_depth() + 6;
        assert_eq!(c.levels_consumed, u64::from(budget));
    }

    #[test]
    fn multi_sort_blocks() {
        let s = sim(16);
        let v: Vec<f64> = (1..=8).rev().map(f64::from).collect();
        let bv = block_split(&s, &v).unwrap();
        s.cost_reset();
        let out = multi_sort(&s, &bv, &SortConfig::default()).unwrap();
        let c = s.cost_snapshot();
        assert_eq!((c.cmp_evals, c.ind_evals), (3, 4));
        assert_eq!(block_merge(&s, &out), (1..=8).map(f64::from).collect::<Vec<_>>());
        assert_eq!(&s.decrypt(&out.blocks[0])[..4], &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn multi_sort_ties_and_padding() {
        let s = sim(64);
        let v = [0.5, 0.25, 0.5, 0.0, 0.75, 0.25, 0.5, 1.0, 0.0, 0.5, 0.125];
        let bv = block_split_with(&s, &v, 4).unwrap();
        let out = block_merge(&s, &multi_sort(&s, &bv, &SortConfig::default()).unwrap());
        let mut want = v.to_vec();
        want.sort_by(f64::total_cmp);
        assert_eq!(out, want);
    }

    #[test]
    fn single_block_multi_sort_matches_sort() {
        let s = sim(64);
        let v = [0.3, 0.8, 0.1, 0.3, 0.6, 0.2];
        let bv = block_split(&s, &v).unwrap();
        let multi = multi_sort(&s, &bv, &SortConfig::default()).unwrap();
        let single = sort(&s, &bv.blocks[0], 6, &SortConfig::default()).unwrap();
        assert_eq!(s.decrypt(&multi.blocks[0]), s.decrypt(&single));
    }
}
