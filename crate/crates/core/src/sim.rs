//! Cleartext stand-in for a leveled SIMD homomorphic scheme.
//!
//! A [`Ciphertext`] is a slot vector plus a remaining-level counter. All
//! arithmetic is slotwise double-precision, rotations are cyclic over the
//! full slot vector, and every multiplication (ciphertext or plaintext
//! operand) consumes one level. A [`Simulator`] owns the parameters, the
//! optional noise source and the cost counters shared by every ciphertext
//! it produced.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

static NEXT_CONTEXT: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeParams {
    pub slot_count: usize,
    pub max_level: u32,
    /// Standard deviation of the additive per-slot noise; 0 is exact.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl HeParams {
    pub fn new(slot_count: usize, max_level: u32) -> Result<Self> {
        let p = HeParams {
            slot_count,
            max_level,
            noise_sigma: 0.0,
            seed: 0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.slot_count < 2 || !self.slot_count.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "slot count {} is not a power of two >= 2",
                self.slot_count
            )));
        }
        if self.max_level < 1 {
            return Err(Error::Parameter("max level must be at least 1".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise sigma {} must be finite and non-negative",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ciphertext {
    slots: Vec<f64>,
    level: u32,
    /// Length of the longest rotation chain this value depends on.
    rot_chain: u64,
    context: u64,
}

impl Ciphertext {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn rotation_chain(&self) -> u64 {
        self.rot_chain
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlainVector {
    values: Vec<f64>,
}

impl PlainVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostReport {
    pub rotations: u64,
    pub ctct_mults: u64,
    pub ctpt_mults: u64,
    pub additions: u64,
    pub cmp_evals: u64,
    pub ind_evals: u64,
    pub levels_consumed: u64,
    pub critical_rotations: u64,
}

impl CostReport {
    pub fn since(&self, earlier: &CostReport) -> CostReport {
        CostReport {
            rotations: self.rotations - earlier.rotations,
            ctct_mults: self.ctct_mults - earlier.ctct_mults,
            ctpt_mults: self.ctpt_mults - earlier.ctpt_mults,
            additions: self.additions - earlier.additions,
            cmp_evals: self.cmp_evals - earlier.cmp_evals,
            ind_evals: self.ind_evals - earlier.ind_evals,
            // high-water marks, not differences
            levels_consumed: self.levels_consumed,
            critical_rotations: self.critical_rotations,
        }
    }
}

#[derive(Default)]
struct Counters {
    rotations: AtomicU64,
    ctct_mults: AtomicU64,
    ctpt_mults: AtomicU64,
    additions: AtomicU64,
    cmp_evals: AtomicU64,
    ind_evals: AtomicU64,
    levels_consumed: AtomicU64,
    critical_rotations: AtomicU64,
}

/// One recorded operation, kept only while tracing is enabled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvent {
    /// Requested offset: positive is a left rotation, negative a right one.
    Rotate(i64),
    Mul,
    MulPlain,
    Add,
    Kernel(&'static str),
}

pub struct Simulator {
    params: HeParams,
    context: u64,
    counters: Counters,
    noise: Option<(Mutex<ChaCha8Rng>, Normal<f64>)>,
    trace: Mutex<Option<Vec<TraceEvent>>>,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator")
            .field("params", &self.params)
            .field("cost", &self.cost_snapshot())
            .finish()
    }
}

impl Simulator {
    pub fn new(params: HeParams) -> Result<Self> {
        params.validate()?;
        let noise = if params.noise_sigma > 0.0 {
            let normal =
                Normal::new(0.0, params.noise_sigma).map_err(|e| Error::Parameter(format!("noise: {e}")))?;
            Some((Mutex::new(ChaCha8Rng::seed_from_u64(params.seed)), normal))
        } else {
            None
        };
        Ok(Simulator {
            params,
            context: NEXT_CONTEXT.fetch_add(1, Ordering::Relaxed),
            counters: Counters::default(),
            noise,
            trace: Mutex::new(None),
        })
    }

    pub fn params(&self) -> &HeParams {
        &self.params
    }

    pub fn slot_count(&self) -> usize {
        self.params.slot_count
    }

    /// True when no noise is injected, i.e. results are bit-exact and
    /// independent of evaluation order.
    pub fn is_exact(&self) -> bool {
        self.noise.is_none()
    }

    pub fn encrypt(&self, v: &[f64]) -> Result<Ciphertext> {
        let slots = self.padded(v)?;
        Ok(Ciphertext {
            slots,
            level: self.params.max_level,
            rot_chain: 0,
            context: self.context,
        })
    }

    pub fn decrypt(&self, ct: &Ciphertext) -> Vec<f64> {
        ct.slots.clone()
    }

    pub fn plain(&self, v: &[f64]) -> Result<PlainVector> {
        Ok(PlainVector {
            values: self.padded(v)?,
        })
    }

    pub fn plain_fill(&self, value: f64) -> PlainVector {
        PlainVector {
            values: vec![value; self.params.slot_count],
        }
    }

    fn padded(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.params.slot_count;
        if v.len() > n {
            return Err(Error::Capacity {
                len: v.len(),
                capacity: n,
            });
        }
        let mut slots = vec![0.0; n];
        slots[..v.len()].copy_from_slice(v);
        Ok(slots)
    }

    fn check(&self, ct: &Ciphertext) -> Result<()> {
        if ct.context != self.context {
            return Err(Error::Incompatible);
        }
        Ok(())
    }

    fn check_plain(&self, p: &PlainVector) -> Result<()> {
        if p.values.len() != self.params.slot_count {
            return Err(Error::Incompatible);
        }
        Ok(())
    }

    fn consume(&self, op: &'static str, level: u32, needed: u32) -> Result<u32> {
        if level < needed {
            return Err(Error::DepthExhausted {
                op,
                stage: None,
                needed,
                available: level,
            });
        }
        Ok(level - needed)
    }

    fn emit(&self, mut slots: Vec<f64>, level: u32, rot_chain: u64) -> Ciphertext {
        if let Some((rng, normal)) = &self.noise {
            let mut rng = rng.lock().expect("noise source poisoned");
            for s in slots.iter_mut() {
                *s += normal.sample(&mut *rng);
            }
        }
        let consumed = u64::from(self.params.max_level - level);
        self.counters
            .levels_consumed
            .fetch_max(consumed, Ordering::Relaxed);
        Ciphertext {
            slots,
            level,
            rot_chain,
            context: self.context,
        }
    }

    fn record(&self, ev: TraceEvent) {
        if let Some(t) = self.trace.lock().expect("trace poisoned").as_mut() {
            t.push(ev);
        }
    }

    fn zip_with(&self, x: &Ciphertext, y: &Ciphertext, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        x.slots.iter().zip(&y.slots).map(|(&a, &b)| f(a, b)).collect()
    }

    fn zip_plain(&self, x: &Ciphertext, p: &PlainVector, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        x.slots.iter().zip(&p.values).map(|(&a, &b)| f(a, b)).collect()
    }

    fn additive(&self, slots: Vec<f64>, level: u32, rot_chain: u64) -> Ciphertext {
        self.counters.additions.fetch_add(1, Ordering::Relaxed);
        self.record(TraceEvent::Add);
        self.emit(slots, level, rot_chain)
    }

    pub fn add(&self, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext> {
        self.check(x)?;
        self.check(y)?;
        let slots = self.zip_with(x, y, |a, b| a + b);
        Ok(self.additive(slots, x.level.min(y.level), x.rot_chain.max(y.rot_chain)))
    }

    pub fn sub(&self, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext> {
        self.check(x)?;
        self.check(y)?;
        let slots = self.zip_with(x, y, |a, b| a - b);
        Ok(self.additive(slots, x.level.min(y.level), x.rot_chain.max(y.rot_chain)))
    }

    pub fn add_plain(&self, x: &Ciphertext, p: &PlainVector) -> Result<Ciphertext> {
        self.check(x)?;
        self.check_plain(p)?;
        let slots = self.zip_plain(x, p, |a, b| a + b);
        Ok(self.additive(slots, x.level, x.rot_chain))
    }

    pub fn sub_plain(&self, x: &Ciphertext, p: &PlainVector) -> Result<Ciphertext> {
        self.check(x)?;
        self.check_plain(p)?;
        let slots = self.zip_plain(x, p, |a, b| a - b);
        Ok(self.additive(slots, x.level, x.rot_chain))
    }

    /// `p - x`.
    pub fn sub_from_plain(&self, p: &PlainVector, x: &Ciphertext) -> Result<Ciphertext> {
        self.check(x)?;
        self.check_plain(p)?;
        let slots = self.zip_plain(x, p, |a, b| b - a);
        Ok(self.additive(slots, x.level, x.rot_chain))
    }

    pub fn add_scalar(&self, x: &Ciphertext, c: f64) -> Result<Ciphertext> {
        self.check(x)?;
        let slots = x.slots.iter().map(|&a| a + c).collect();
        Ok(self.additive(slots, x.level, x.rot_chain))
    }

    pub fn mul(&self, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext> {
        self.check(x)?;
        self.check(y)?;
        let level = self.consume("mul", x.level.min(y.level), 1)?;
        let slots = self.zip_with(x, y, |a, b| a * b);
        self.counters.ctct_mults.fetch_add(1, Ordering::Relaxed);
        self.record(TraceEvent::Mul);
        Ok(self.emit(slots, level, x.rot_chain.max(y.rot_chain)))
    }

    pub fn mul_plain(&self, x: &Ciphertext, p: &PlainVector) -> Result<Ciphertext> {
        self.check(x)?;
        self.check_plain(p)?;
        let level = self.consume("mul_plain", x.level, 1)?;
        let slots = self.zip_plain(x, p, |a, b| a * b);
        self.counters.ctpt_mults.fetch_add(1, Ordering::Relaxed);
        self.record(TraceEvent::MulPlain);
        Ok(self.emit(slots, level, x.rot_chain))
    }

    /// Multiplication by a broadcast constant; costs like `mul_plain`.
    pub fn mul_scalar(&self, x: &Ciphertext, c: f64) -> Result<Ciphertext> {
        self.check(x)?;
        let level = self.consume("mul_scalar", x.level, 1)?;
        let slots = x.slots.iter().map(|&a| a * c).collect();
        self.counters.ctpt_mults.fetch_add(1, Ordering::Relaxed);
        self.record(TraceEvent::MulPlain);
        Ok(self.emit(slots, level, x.rot_chain))
    }

    /// Cyclic rotation; positive `k` rotates left (`[a,b,c,d] -> [b,c,d,a]`).
    pub fn rotate(&self, x: &Ciphertext, k: i64) -> Result<Ciphertext> {
        self.check(x)?;
        let n = self.params.slot_count as i64;
        let shift = k.rem_euclid(n) as usize;
        if shift == 0 {
            return Ok(x.clone());
        }
        let mut slots = x.slots.clone();
        slots.rotate_left(shift);
        let chain = x.rot_chain + 1;
        self.counters.rotations.fetch_add(1, Ordering::Relaxed);
        self.counters
            .critical_rotations
            .fetch_max(chain, Ordering::Relaxed);
        self.record(TraceEvent::Rotate(k));
        Ok(Ciphertext {
            slots,
            level: x.level,
            rot_chain: chain,
            context: self.context,
        })
    }

    /// Evaluates an exact slotwise function while charging `depth` levels.
    /// This is how the ideal-functionality kernels run.
    pub(crate) fn apply_exact(
        &self,
        op: &'static str,
        inputs: &[&Ciphertext],
        depth: u32,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Ciphertext> {
        for x in inputs {
            self.check(x)?;
        }
        let level = inputs
            .iter()
            .map(|x| x.level)
            .min()
            .unwrap_or(self.params.max_level);
        let level = self.consume(op, level, depth)?;
        let rot_chain = inputs.iter().map(|x| x.rot_chain).max().unwrap_or(0);
        let mut args = vec![0.0; inputs.len()];
        let slots = (0..self.params.slot_count)
            .map(|s| {
                for (a, x) in args.iter_mut().zip(inputs) {
                    *a = x.slots[s];
                }
                f(&args)
            })
            .collect();
        self.record(TraceEvent::Kernel(op));
        Ok(self.emit(slots, level, rot_chain))
    }

    pub(crate) fn note_cmp_eval(&self) {
        self.counters.cmp_evals.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn note_ind_eval(&self) {
        self.counters.ind_evals.fetch_add(1, Ordering::Relaxed);
    }

    pub fn cost_snapshot(&self) -> CostReport {
        let c = &self.counters;
        CostReport {
            rotations: c.rotations.load(Ordering::Relaxed),
            ctct_mults: c.ctct_mults.load(Ordering::Relaxed),
            ctpt_mults: c.ctpt_mults.load(Ordering::Relaxed),
            additions: c.additions.load(Ordering::Relaxed),
            cmp_evals: c.cmp_evals.load(Ordering::Relaxed),
            ind_evals: c.ind_evals.load(Ordering::Relaxed),
            levels_consumed: c.levels_consumed.load(Ordering::Relaxed),
            critical_rotations: c.critical_rotations.load(Ordering::Relaxed),
        }
    }

    pub fn cost_reset(&self) {
        let c = &self.counters;
        for a in [
            &c.rotations,
            &c.ctct_mults,
            &c.ctpt_mults,
            &c.additions,
            &c.cmp_evals,
            &c.ind_evals,
            &c.levels_consumed,
            &c.critical_rotations,
        ] {
            a.store(0, Ordering::Relaxed);
        }
    }

    pub fn enable_trace(&self) {
        *self.trace.lock().expect("trace poisoned") = Some(Vec::new());
    }

    /// Returns the recorded events and stops tracing.
    pub fn take_trace(&self) -> Vec<TraceEvent> {
        self.trace
            .lock()
            .expect("trace poisoned")
            .take()
            .unwrap_or_default()
    }
}
