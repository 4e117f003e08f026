//! Fractional ranking with a single comparison evaluation, the
//! tie-correction offset, and the multi-ciphertext block variant.
//!
//! The vector `v` sits in row 0 of an `N x N` matrix. Replicating it over
//! the rows (`V_R`) and, after transposition, over the columns (`V_C`)
//! puts every pair `(v_i, v_j)` in some slot, so one slotwise comparison
//! yields the full comparison matrix. Summing that matrix over one axis
//! gives the ranks.

use rayon::prelude::*;

use crate::error::{Error, Result, StageExt};
use crate::kernels::{cmp_variant_kernel, CmpVariant, KernelConfig};
use crate::matrix::{repl, sum, transpose_vec, Axis, Direction, MatrixLayout};
use crate::sim::{Ciphertext, PlainVector, Simulator};

#[derive(Debug, Clone)]
pub struct RankResult {
    /// Row 0 holds `r_1..r_N`; padded positions hold 0.
    pub ranks: Ciphertext,
    pub layout: MatrixLayout,
    /// Whether the tie-correction offset has been added.
    pub corrected: bool,
    pub len: usize,
}

/// Orientation of the comparison matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Form {
    /// `C[i][j] = cmp(v_j, v_i)`; ranks come out in row 0.
    Row,
    /// `C[i][j] = cmp(v_i, v_j)`; ranks come out in column 0.
    Col,
}

pub(crate) struct Ranked {
    pub ranks: Ciphertext,
    pub comparison: Ciphertext,
    /// `ReplR(V)`.
    pub v_rows: Ciphertext,
    /// `ReplC(TransR(V))`.
    pub v_cols: Ciphertext,
    pub layout: MatrixLayout,
}

/// Runs `f` over `items`, in parallel when the simulator is exact (noise
/// draws would otherwise depend on scheduling).
pub(crate) fn par_map<T: Sync, U: Send>(
    sim: &Simulator,
    items: &[T],
    f: impl Fn(&T) -> Result<U> + Sync + Send,
) -> Result<Vec<U>> {
    if sim.is_exact() {
        items.par_iter().map(&f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

fn indicator(b: bool) -> f64 {
    f64::from(u8::from(b))
}

/// Plaintext holding `value` on the first `len` positions of row 0
/// (`Form::Row`) or column 0 (`Form::Col`).
fn line_constant(
    sim: &Simulator,
    layout: &MatrixLayout,
    form: Form,
    len: usize,
    value: f64,
) -> Result<PlainVector> {
    layout.plaintext(sim, |i, j| match form {
        Form::Row => indicator(i == 0 && j < len) * value,
        Form::Col => indicator(j == 0 && i < len) * value,
    })
}

/// Weights turning `c (1 - c)` into `e * (lower-or-equal-position - 1/2)`
/// where `e = 4 c (1 - c)` is the equality matrix. Summed over the rank
/// axis this yields `u - t/2` of the offset computation, with the
/// off-position cells and padded cells already zeroed.
fn tie_weights(sim: &Simulator, layout: &MatrixLayout, form: Form, len: usize) -> Result<PlainVector> {
    layout.plaintext(sim, |i, j| {
        if i >= len || j >= len {
            return 0.0;
        }
        let before = match form {
            Form::Row => i <= j,
            Form::Col => j <= i,
        };
        4.0 * indicator(before) - 2.0
    })
}

fn product_with_complement(sim: &Simulator, c: &Ciphertext) -> Result<Ciphertext> {
    let one_minus = sim.sub_from_plain(&sim.plain_fill(1.0), c)?;
    sim.mul(c, &one_minus)
}

pub(crate) fn replicate_input(
    sim: &Simulator,
    v: &Ciphertext,
    layout: &MatrixLayout,
) -> Result<(Ciphertext, Ciphertext)> {
    let v_rows = repl(sim, v, layout, Axis::Row).stage("rank/replicate-rows")?;
    let col = transpose_vec(sim, v, layout, Direction::RowToCol).stage("rank/transpose")?;
    let v_cols = repl(sim, &col, layout, Axis::Col).stage("rank/replicate-cols")?;
    Ok((v_rows, v_cols))
}

pub(crate) fn single_layout(sim: &Simulator, len: usize) -> Result<MatrixLayout> {
    if len == 0 {
        return Err(Error::Parameter("cannot rank an empty vector".into()));
    }
    MatrixLayout::for_len(len, sim.slot_count()).map_err(|e| match e {
        Error::Capacity { .. } => Error::Capacity {
            len: len.next_power_of_two().pow(2),
            capacity: sim.slot_count(),
        },
        other => other,
    })
}

pub(crate) fn rank_pipeline(
    sim: &Simulator,
    v: &Ciphertext,
    len: usize,
    cfg: &KernelConfig,
    variant: CmpVariant,
    form: Form,
    corrected: bool,
) -> Result<Ranked> {
    if corrected && variant != CmpVariant::Fractional {
        return Err(Error::Parameter(
            "tie correction applies to the fractional comparison only".into(),
        ));
    }
    let layout = single_layout(sim, len)?;
    let (v_rows, v_cols) = replicate_input(sim, v, &layout)?;
    let raw = match form {
        Form::Row => cmp_variant_kernel(sim, &v_rows, &v_cols, cfg, variant),
        Form::Col => cmp_variant_kernel(sim, &v_cols, &v_rows, cfg, variant),
    }
    .stage("rank/compare")?;

    let padded = len < layout.dim();
    let comparison = if padded {
        let valid = layout.plaintext(sim, |i, j| indicator(i < len && j < len))?;
        sim.mul_plain(&raw, &valid).stage("rank/padding-mask")?
    } else {
        raw.clone()
    };

    let mut acc = comparison.clone();
    if corrected {
        let p = product_with_complement(sim, &raw).stage("rank/tie-offset")?;
        let weighted = sim
            .mul_plain(&p, &tie_weights(sim, &layout, form, len)?)
            .stage("rank/tie-offset")?;
        acc = sim.add(&acc, &weighted)?;
    }
    let axis = match form {
        Form::Row => Axis::Row,
        Form::Col => Axis::Col,
    };
    let summed = sum(sim, &acc, &layout, axis).stage("rank/sum")?;

    let offset = 1.0 - variant.diagonal() - if corrected { 0.5 } else { 0.0 };
    let ranks = if offset != 0.0 {
        sim.add_plain(&summed, &line_constant(sim, &layout, form, len, offset)?)?
    } else {
        summed
    };
    Ok(Ranked {
        ranks,
        comparison,
        v_rows,
        v_cols,
        layout,
    })
}

/// Fractional ranking of the first `len` slots of `v`:
/// `r_j = sum_i cmp(v_j, v_i) + 0.5`.
pub fn rank(sim: &Simulator, v: &Ciphertext, len: usize, cfg: &KernelConfig) -> Result<RankResult> {
    rank_with(sim, v, len, cfg, CmpVariant::Fractional)
}

/// Ranking under a specific comparison variant. With `Strict` every
/// minimal element gets rank 1; with `NonStrict` every maximal element
/// gets rank `len`.
pub fn rank_with(
    sim: &Simulator,
    v: &Ciphertext,
    len: usize,
    cfg: &KernelConfig,
    variant: CmpVariant,
) -> Result<RankResult> {
    let r = rank_pipeline(sim, v, len, cfg, variant, Form::Row, false)?;
    Ok(RankResult {
        ranks: r.ranks,
        layout: r.layout,
        corrected: false,
        len,
    })
}

/// Ranking plus tie-correction offset: a permutation of `1..=len` where
/// tied elements are ordered by position. Reuses the single comparison.
pub fn rank_corrected(sim: &Simulator, v: &Ciphertext, len: usize, cfg: &KernelConfig) -> Result<RankResult> {
    let r = rank_pipeline(sim, v, len, cfg, CmpVariant::Fractional, Form::Row, true)?;
    Ok(RankResult {
        ranks: r.ranks,
        layout: r.layout,
        corrected: true,
        len,
    })
}

/// The row-form comparison matrix `C[i][j] = cmp(v_j, v_i)` (padded
/// rows and columns zeroed).
pub fn comparison_matrix(
    sim: &Simulator,
    v: &Ciphertext,
    len: usize,
    cfg: &KernelConfig,
) -> Result<(Ciphertext, MatrixLayout)> {
    let r = rank_pipeline(sim, v, len, cfg, CmpVariant::Fractional, Form::Row, false)?;
    Ok((r.comparison, r.layout))
}

/// Tie-correction offset from a row-form comparison matrix: row 0 holds
/// `f_j = u_j - t_j / 2 - 1/2` where `u_j` counts the elements equal to
/// `v_j` at positions `<= j` and `t_j` counts all elements equal to it.
///
/// The factor 4 of `e = 4 c (1 - c)` is folded into the triangle mask, so
/// the offset costs one ciphertext and one plaintext multiplication.
pub fn tie_offset(sim: &Simulator, c: &Ciphertext, layout: &MatrixLayout, len: usize) -> Result<Ciphertext> {
    if len == 0 || len > layout.dim() {
        return Err(Error::Index {
            index: len,
            dim: layout.dim(),
        });
    }
    let p = product_with_complement(sim, c).stage("tie-offset/equality")?;
    let weighted = sim
        .mul_plain(&p, &tie_weights(sim, layout, Form::Row, len)?)
        .stage("tie-offset/mask")?;
    let summed = sum(sim, &weighted, layout, Axis::Row).stage("tie-offset/sum")?;
    sim.add_plain(&summed, &line_constant(sim, layout, Form::Row, len, -0.5)?)
}

/// A long vector split into blocks of `block_size`, one ciphertext each;
/// each block's values sit in row 0 of a `block_size x block_size`
/// matrix. The last block is zero-padded.
#[derive(Debug, Clone)]
pub struct BlockVector {
    pub blocks: Vec<Ciphertext>,
    pub block_size: usize,
    pub total_len: usize,
}

impl BlockVector {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Number of real (non-padding) elements in block `i`.
    pub fn block_len(&self, i: usize) -> usize {
        (self.total_len - i * self.block_size).min(self.block_size)
    }

    pub fn layout(&self, sim: &Simulator) -> Result<MatrixLayout> {
        MatrixLayout::new(self.block_size, sim.slot_count())
    }
}

/// Largest power-of-two block side whose square fits the slot count.
pub fn default_block_size(slot_count: usize) -> usize {
    1 << (slot_count.trailing_zeros() / 2)
}

pub fn block_split(sim: &Simulator, v: &[f64]) -> Result<BlockVector> {
    block_split_with(sim, v, default_block_size(sim.slot_count()))
}

pub fn block_split_with(sim: &Simulator, v: &[f64], block_size: usize) -> Result<BlockVector> {
    MatrixLayout::new(block_size, sim.slot_count())?;
    if v.is_empty() {
        return Err(Error::Parameter("cannot split an empty vector".into()));
    }
    let blocks = v
        .chunks(block_size)
        .map(|chunk| sim.encrypt(chunk))
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockVector {
        blocks,
        block_size,
        total_len: v.len(),
    })
}

/// Decrypts and concatenates the row-0 prefixes of every block.
pub fn block_merge(sim: &Simulator, bv: &BlockVector) -> Vec<f64> {
    let mut out = Vec::with_capacity(bv.total_len);
    for (i, b) in bv.blocks.iter().enumerate() {
        out.extend_from_slice(&sim.decrypt(b)[..bv.block_len(i)]);
    }
    out
}

/// Packs the blocks' row 0 contiguously into one ciphertext by rotation.
/// Each block must be zero outside its row 0.
pub fn merge_ciphertext(sim: &Simulator, bv: &BlockVector) -> Result<Ciphertext> {
    let span = bv.block_count() * bv.block_size;
    if span > sim.slot_count() {
        return Err(Error::Capacity {
            len: span,
            capacity: sim.slot_count(),
        });
    }
    let mut acc = bv.blocks[0].clone();
    for (i, b) in bv.blocks.iter().enumerate().skip(1) {
        let moved = sim.rotate(b, -((i * bv.block_size) as i64))?;
        acc = sim.add(&acc, &moved)?;
    }
    Ok(acc)
}

pub(crate) struct MultiRanked {
    pub ranks: Vec<Ciphertext>,
    pub v_rows: Vec<Ciphertext>,
    pub layout: MatrixLayout,
}

/// `C_{i,j} = cmp(ReplR(V_i), ReplC(TransR(V_j)))`: entry `(m, n)`
/// compares element `n` of block `i` against element `m` of block `j`.
pub fn block_comparison(
    sim: &Simulator,
    bv: &BlockVector,
    i: usize,
    j: usize,
    cfg: &KernelConfig,
) -> Result<Ciphertext> {
    let layout = bv.layout(sim)?;
    let (rows_i, _) = replicate_input(sim, &bv.blocks[i], &layout)?;
    let (_, cols_j) = replicate_input(sim, &bv.blocks[j], &layout)?;
    cmp_variant_kernel(sim, &rows_i, &cols_j, cfg, CmpVariant::Fractional)
}

pub(crate) fn multi_rank_pipeline(
    sim: &Simulator,
    bv: &BlockVector,
    cfg: &KernelConfig,
    corrected: bool,
) -> Result<MultiRanked> {
    let layout = bv.layout(sim)?;
    let l = bv.block_count();
    let lens: Vec<usize> = (0..l).map(|i| bv.block_len(i)).collect();

    let replicated = par_map(sim, &bv.blocks, |b| replicate_input(sim, b, &layout))?;

    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|i| (i..l).map(move |j| (i, j))).collect();
    struct Pair {
        masked: Ciphertext,
        product: Option<Ciphertext>,
    }
    let compared = par_map(sim, &pairs, |&(i, j)| {
        let raw = cmp_variant_kernel(
            sim,
            &replicated[i].0,
            &replicated[j].1,
            cfg,
            CmpVariant::Fractional,
        )
        .stage("multi-rank/compare")?;
        let masked = if lens[i] < bv.block_size || lens[j] < bv.block_size {
            let valid = layout.plaintext(sim, |m, n| indicator(n < lens[i] && m < lens[j]))?;
            sim.mul_plain(&raw, &valid).stage("multi-rank/padding-mask")?
        } else {
            raw.clone()
        };
        let product = if corrected {
            Some(product_with_complement(sim, &raw).stage("multi-rank/tie-offset")?)
        } else {
            None
        };
        Ok(Pair { masked, product })
    })?;
    let pair_index = |i: usize, j: usize| pairs.iter().position(|&p| p == (i, j)).expect("pair computed");

    let block_ids: Vec<usize> = (0..l).collect();
    let ranks = par_map(sim, &block_ids, |&i| {
        // entries whose columns are block i's elements
        let mut row_acc: Option<Ciphertext> = None;
        for j in i..l {
            let pair = &compared[pair_index(i, j)];
            let mut term = pair.masked.clone();
            if let Some(p) = &pair.product {
                let w = layout.plaintext(sim, |m, n| {
                    if n >= lens[i] || m >= lens[j] {
                        0.0
                    } else if j == i {
                        4.0 * indicator(m <= n) - 2.0
                    } else {
                        -2.0
                    }
                })?;
                term = sim.add(&term, &sim.mul_plain(p, &w).stage("multi-rank/tie-offset")?)?;
            }
            row_acc = Some(match row_acc {
                None => term,
                Some(a) => sim.add(&a, &term)?,
            });
        }
        let mut rank = sum(sim, &row_acc.expect("j = i term"), &layout, Axis::Row).stage("multi-rank/sum")?;

        // complements (1 - C_{j,i}) for j < i, reduced row-wise then transposed
        if i > 0 {
            let mut col_acc: Option<Ciphertext> = None;
            for j in 0..i {
                let pair = &compared[pair_index(j, i)];
                let valid = layout.plaintext(sim, |m, n| indicator(n < lens[j] && m < lens[i]))?;
                let mut term = sim.sub_from_plain(&valid, &pair.masked)?;
                if let Some(p) = &pair.product {
                    let w = layout.plaintext(sim, |m, n| 2.0 * indicator(n < lens[j] && m < lens[i]))?;
                    term = sim.add(&term, &sim.mul_plain(p, &w).stage("multi-rank/tie-offset")?)?;
                }
                col_acc = Some(match col_acc {
                    None => term,
                    Some(a) => sim.add(&a, &term)?,
                });
            }
            let col_sum =
                sum(sim, &col_acc.expect("j < i term"), &layout, Axis::Col).stage("multi-rank/sum")?;
            let moved =
                transpose_vec(sim, &col_sum, &layout, Direction::ColToRow).stage("multi-rank/transpose")?;
            rank = sim.add(&rank, &moved)?;
        }
        if !corrected {
            rank = sim.add_plain(&rank, &line_constant(sim, &layout, Form::Row, lens[i], 0.5)?)?;
        }
        Ok(rank)
    })?;

    Ok(MultiRanked {
        ranks,
        v_rows: replicated.into_iter().map(|(r, _)| r).collect(),
        layout,
    })
}

fn wrap_blocks(bv: &BlockVector, blocks: Vec<Ciphertext>) -> BlockVector {
    BlockVector {
        blocks,
        block_size: bv.block_size,
        total_len: bv.total_len,
    }
}

/// Block-wise fractional ranking with `L(L+1)/2` comparisons: `C_{i,j}`
/// is evaluated only for `j >= i`, the rest via `C_{i,j} = (1 - C_{j,i})^T`.
pub fn multi_rank(sim: &Simulator, bv: &BlockVector, cfg: &KernelConfig) -> Result<BlockVector> {
    let r = multi_rank_pipeline(sim, bv, cfg, false)?;
    Ok(wrap_blocks(bv, r.ranks))
}

/// Block-wise ranking with the tie-correction offset extended across
/// block boundaries.
pub fn multi_rank_corrected(sim: &Simulator, bv: &BlockVector, cfg: &KernelConfig) -> Result<BlockVector> {
    let r = multi_rank_pipeline(sim, bv, cfg, true)?;
    Ok(wrap_blocks(bv, r.ranks))
}
