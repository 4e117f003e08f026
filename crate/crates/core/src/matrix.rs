//! Row-major square matrices inside a ciphertext and the rotate-and-mask
//! primitives over them.
//!
//! Cell `(i, j)` of an `N x N` matrix lives in slot `i * N + j`. Sum and
//! replication take `log2 N` rotations, vector transposition takes
//! `log2 N` rotations and one mask.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::sim::{Ciphertext, PlainVector, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Row,
    Col,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    RowToCol,
    ColToRow,
}

type MaskCache = Arc<Mutex<HashMap<(Axis, usize), Arc<PlainVector>>>>;

#[derive(Debug, Clone)]
pub struct MatrixLayout {
    n: usize,
    slot_count: usize,
    masks: MaskCache,
}

impl PartialEq for MatrixLayout {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.slot_count == other.slot_count
    }
}

impl MatrixLayout {
    pub fn new(n: usize, slot_count: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!("matrix side {n} is not a power of two")));
        }
        if n * n > slot_count {
            return Err(Error::Capacity {
                len: n * n,
                capacity: slot_count,
            });
        }
        Ok(MatrixLayout {
            n,
            slot_count,
            masks: Arc::default(),
        })
    }

    /// Smallest power-of-two layout holding a vector of `len` elements.
    pub fn for_len(len: usize, slot_count: usize) -> Result<Self> {
        MatrixLayout::new(len.max(1).next_power_of_two(), slot_count)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn slot_count(&self) -> usize {
        self.slot_count
    }

    pub fn slot(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn log_dim(&self) -> u32 {
        self.n.trailing_zeros()
    }

    /// Matrix-shaped plaintext: `f(i, j)` on the `N x N` block, zeros beyond.
    pub fn plaintext(&self, sim: &Simulator, f: impl Fn(usize, usize) -> f64) -> Result<PlainVector> {
        let mut v = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                v[self.slot(i, j)] = f(i, j);
            }
        }
        sim.plain(&v)
    }

    pub fn mask_plain(&self, sim: &Simulator, axis: Axis, k: usize) -> Result<Arc<PlainVector>> {
        if k >= self.n {
            return Err(Error::Index {
                index: k,
                dim: self.n,
            });
        }
        let mut cache = self.masks.lock().expect("mask cache poisoned");
        if let Some(m) = cache.get(&(axis, k)) {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(self.plaintext(sim, |i, j| match axis {
            Axis::Row => f64::from(u8::from(i == k)),
            Axis::Col => f64::from(u8::from(j == k)),
        })?);
        cache.insert((axis, k), Arc::clone(&m));
        Ok(m)
    }

    fn check(&self, sim: &Simulator) -> Result<()> {
        if sim.slot_count() != self.slot_count {
            return Err(Error::Incompatible);
        }
        Ok(())
    }
}

/// Keeps row (or column) `k` and zeroes every other cell.
pub fn mask(
    sim: &Simulator,
    x: &Ciphertext,
    layout: &MatrixLayout,
    axis: Axis,
    k: usize,
) -> Result<Ciphertext> {
    layout.check(sim)?;
    let m = layout.mask_plain(sim, axis, k)?;
    sim.mul_plain(x, &m)
}

/// `axis = Row`: column sums land in row 0. `axis = Col`: row sums land in
/// column 0. Everything else is zeroed.
pub fn sum(sim: &Simulator, x: &Ciphertext, layout: &MatrixLayout, axis: Axis) -> Result<Ciphertext> {
    layout.check(sim)?;
    let n = layout.dim();
    let step = match axis {
        Axis::Row => n,
        Axis::Col => 1,
    };
    let mut acc = x.clone();
    for i in 0..layout.log_dim() {
        let shifted = sim.rotate(&acc, (step << i) as i64)?;
        acc = sim.add(&acc, &shifted)?;
    }
    mask(sim, &acc, layout, axis, 0)
}

/// Copies row 0 (or column 0) into every row (column). The caller
/// guarantees all other cells are zero.
pub fn repl(sim: &Simulator, x: &Ciphertext, layout: &MatrixLayout, axis: Axis) -> Result<Ciphertext> {
    layout.check(sim)?;
    let n = layout.dim();
    let step = match axis {
        Axis::Row => n,
        Axis::Col => 1,
    };
    let mut acc = x.clone();
    for i in 0..layout.log_dim() {
        let shifted = sim.rotate(&acc, -((step << i) as i64))?;
        acc = sim.add(&acc, &shifted)?;
    }
    Ok(acc)
}

/// Moves a vector held in row 0 into column 0 (`RowToCol`) or back.
///
/// Rotates by `N(N-1)/2^i` for `i = 1..=log2 N` (right for `RowToCol`,
/// left for `ColToRow`), then masks the target column/row.
pub fn transpose_vec(
    sim: &Simulator,
    x: &Ciphertext,
    layout: &MatrixLayout,
    direction: Direction,
) -> Result<Ciphertext> {
    layout.check(sim)?;
    let n = layout.dim();
    let span = n * (n - 1);
    let mut acc = x.clone();
    for i in 1..=layout.log_dim() {
        let off = (span >> i) as i64;
        let off = match direction {
            Direction::RowToCol => -off,
            Direction::ColToRow => off,
        };
        let shifted = sim.rotate(&acc, off)?;
        acc = sim.add(&acc, &shifted)?;
    }
    let target = match direction {
        Direction::RowToCol => Axis::Col,
        Direction::ColToRow => Axis::Row,
    };
    mask(sim, &acc, layout, target, 0)
}
