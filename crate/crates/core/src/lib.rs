//! Sorting, ranking and order statistics over SIMD homomorphic encryption,
//! run against a cleartext leveled simulator that counts every rotation,
//! multiplication and level the circuits would consume.
//!
//! A vector of length `N` is ranked with one comparison evaluation on an
//! `N x N` packed matrix; sorting and selection reuse the ranks through an
//! indicator kernel.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chebyshev;
pub mod error;
pub mod kernels;
pub mod matrix;
pub mod plain;
pub mod rank;
pub mod select;
pub mod sim;
pub mod sort;

pub use chebyshev::{ps_cost, ps_eval, ChebyshevPolynomial, PsCost};
pub use error::{Error, Result};
pub use kernels::{CmpVariant, KernelConfig, KernelMode, Reciprocal};
pub use matrix::{Axis, Direction, MatrixLayout};
pub use rank::{
    block_merge, block_split, block_split_with, multi_rank, multi_rank_corrected, rank, rank_corrected,
    tie_offset, BlockVector, RankResult,
};

pub use select::{median, order_statistic_mask, order_statistic_value, percentile, StatKind, StatisticQuery};
pub use sim::{Ciphertext, CostReport, HeParams, PlainVector, Simulator, TraceEvent};
pub use sort::{multi_sort, sort, sort_detailed, SortConfig, SortOutput};
