//! Order statistics: a mask marking the element of a given rank, and the
//! value behind it via an inner product divided by the mask weight.

use crate::error::{Error, Result, StageExt};
use crate::kernels::{ind_kernel, reciprocal, CmpVariant, KernelConfig};
use crate::matrix::{sum, Axis, MatrixLayout};
use crate::rank::{rank_pipeline, Form};
use crate::sim::{Ciphertext, Simulator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StatKind {
    /// The `k`-th smallest element, 1-based.
    Kth(usize),
    Min,
    Max,
    Median,
    /// Nearest-rank percentile, `p` in `[0, 100]`.
    Percentile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticQuery {
    pub kind: StatKind,
    /// Rank with the tie-correction offset, so exactly one element holds
    /// each rank. Ignored by `Min` and `Max`, which handle duplicated
    /// extremes through strict / non-strict comparison instead.
    pub tie_correction: bool,
}

impl StatisticQuery {
    pub fn new(kind: StatKind) -> Self {
        StatisticQuery {
            kind,
            tie_correction: true,
        }
    }

    pub fn kth(k: usize) -> Self {
        Self::new(StatKind::Kth(k))
    }

    pub fn min() -> Self {
        Self::new(StatKind::Min)
    }

    pub fn max() -> Self {
        Self::new(StatKind::Max)
    }

    pub fn median() -> Self {
        Self::new(StatKind::Median)
    }

    pub fn percentile(p: f64) -> Self {
        Self::new(StatKind::Percentile(p))
    }

    pub fn with_tie_correction(mut self, on: bool) -> Self {
        self.tie_correction = on;
        self
    }
}

/// Nearest-rank index for percentile `p` of `len` elements.
pub fn percentile_rank(p: f64, len: usize) -> Result<usize> {
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Parameter(format!("percentile {p} outside [0, 100]")));
    }
    let k = (p / 100.0 * len as f64).round() as usize;
    Ok(k.clamp(1, len))
}

/// A concrete rank selection: which comparison to rank with, whether to
/// correct ties, and the rank interval the indicator picks out.
struct Plan {
    variant: CmpVariant,
    corrected: bool,
    interval: (f64, f64),
}

fn plan(query: &StatisticQuery, len: usize) -> Result<Plan> {
    let around = |k: f64| (k - 0.5, k + 0.5);
    let kth = |k: usize| -> Result<Plan> {
        if k < 1 || k > len {
            return Err(Error::Parameter(format!("rank {k} outside [1, {len}]")));
        }
        // uncorrected ranks can be half-integers, which would sit on the
        // boundary of the closed interval around k
        let radius = if query.tie_correction { 0.5 } else { 0.25 };
        let k = k as f64;
        Ok(Plan {
            variant: CmpVariant::Fractional,
            corrected: query.tie_correction,
            interval: (k - radius, k + radius),
        })
    };
    match query.kind {
        StatKind::Kth(k) => kth(k),
        StatKind::Min => Ok(Plan {
            variant: CmpVariant::Strict,
            corrected: false,
            interval: around(1.0),
        }),
        StatKind::Max => Ok(Plan {
            variant: CmpVariant::NonStrict,
            corrected: false,
            interval: around(len as f64),
        }),
        StatKind::Median if len % 2 == 1 => kth(len.div_ceil(2)),
        // both middle ranks at once; the value path halves the sum
        StatKind::Median => Ok(Plan {
            variant: CmpVariant::Fractional,
            corrected: true,
            interval: (len as f64 / 2.0 - 0.5, len as f64 / 2.0 + 1.5),
        }),
        StatKind::Percentile(p) => {
            if !(0.0..=100.0).contains(&p) {
                return Err(Error::Parameter(format!("percentile {p} outside [0, 100]")));
            }
            if p == 0.0 {
                plan(
                    &StatisticQuery {
                        kind: StatKind::Min,
                        ..*query
                    },
                    len,
                )
            } else if p == 100.0 {
                plan(
                    &StatisticQuery {
                        kind: StatKind::Max,
                        ..*query
                    },
                    len,
                )
            } else {
                kth(percentile_rank(p, len)?)
            }
        }
    }
}

fn is_even_median(query: &StatisticQuery, len: usize) -> bool {
    query.kind == StatKind::Median && len.is_multiple_of(2)
}

struct Masked {
    mask: Ciphertext,
    layout: MatrixLayout,
}

fn mask_inner(
    sim: &Simulator,
    v: &Ciphertext,
    len: usize,
    query: &StatisticQuery,
    cfg: &KernelConfig,
) -> Result<Masked> {
    let p = plan(query, len)?;
    let ranked = rank_pipeline(sim, v, len, cfg, p.variant, Form::Row, p.corrected)?;
    let ind_cfg = cfg.with_range(0.0, (len + 1) as f64);
    let mask =
        ind_kernel(sim, &ranked.ranks, p.interval.0, p.interval.1, &ind_cfg).stage("select/indicator")?;
    Ok(Masked {
        mask,
        layout: ranked.layout,
    })
}

/// Row 0 holds 1 at the positions whose rank matches the query, 0
/// elsewhere. Without tie correction several positions can share a
/// fractional rank; then the mask is multi-hot or empty.
pub fn order_statistic_mask(
    sim: &Simulator,
    v: &Ciphertext,
    len: usize,
    query: &StatisticQuery,
    cfg: &KernelConfig,
) -> Result<Ciphertext> {
    mask_inner(sim, v, len, query, cfg).map(|m| m.mask)
}

/// The queried value in slot 0 (all other slots 0). Returns 0 when no
/// element holds the requested rank.
pub fn order_statistic_value(
    sim: &Simulator,
    v: &Ciphertext,
    len: usize,
    query: &StatisticQuery,
    cfg: &KernelConfig,
) -> Result<Ciphertext> {
    let m = mask_inner(sim, v, len, query, cfg)?;
    let picked = sim.mul(&m.mask, v).stage("select/inner-product")?;
    let numerator = sum(sim, &picked, &m.layout, Axis::Col).stage("select/inner-product")?;
    if is_even_median(query, len) {
        return sim
            .mul_plain(&numerator, &sim.plain_fill(0.5))
            .stage("select/halve");
    }
    let weight = sum(sim, &m.mask, &m.layout, Axis::Col).stage("select/norm")?;
    let inverse = reciprocal(sim, &weight, (0.5, len as f64 + 0.5), cfg).stage("select/reciprocal")?;
    sim.mul(&numerator, &inverse).stage("select/divide")
}

/// Middle element for odd `len`, mean of the two middle elements for even.
pub fn median(sim: &Simulator, v: &Ciphertext, len: usize, cfg: &KernelConfig) -> Result<Ciphertext> {
    order_statistic_value(sim, v, len, &StatisticQuery::median(), cfg)
}

pub fn percentile(
    sim: &Simulator,
    v: &Ciphertext,
    len: usize,
    p: f64,
    cfg: &KernelConfig,
) -> Result<Ciphertext> {
    order_statistic_value(sim, v, len, &StatisticQuery::percentile(p), cfg)
}
