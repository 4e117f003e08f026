//! Non-polynomial kernels: comparison, indicator, equality-from-comparison
//! and reciprocal.
//!
//! Every kernel runs in one of two modes. `Ideal` computes the exact
//! function slotwise while still charging the levels a real circuit of the
//! configured degree would consume, so depth budgets can be checked
//! without approximation error. `Chebyshev` evaluates a fitted polynomial
//! with [`ps_eval`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::chebyshev::{ps_cost, ps_eval, ChebyshevPolynomial};
use crate::error::{Error, Result};
use crate::sim::{Ciphertext, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    Ideal,
    Chebyshev,
}

/// How value retrieval divides by the mask weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reciprocal {
    Goldschmidt,
    /// Direct Chebyshev fit of `1/x` of the given degree.
    Chebyshev(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub mode: KernelMode,
    pub cmp_degree: usize,
    pub ind_degree: usize,
    /// Range the compared values are promised to lie in.
    pub input_range: (f64, f64),
    /// Half the minimum gap between distinct inputs. Chebyshev mode shifts
    /// the strict / non-strict comparisons by it; ideal mode treats
    /// differences within it as ties, which keeps ties intact under noise.
    pub tie_margin: f64,
    pub goldschmidt_iters: u32,
    pub reciprocal: Reciprocal,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig::ideal()
    }
}

impl KernelConfig {
    pub fn ideal() -> Self {
        KernelConfig {
            mode: KernelMode::Ideal,
            cmp_degree: 255,
            ind_degree: 255,
            input_range: (0.0, 1.0),
            tie_margin: 0.0,
            goldschmidt_iters: 8,
            reciprocal: Reciprocal::Goldschmidt,
        }
    }

    pub fn chebyshev(cmp_degree: usize, ind_degree: usize) -> Self {
        KernelConfig {
            mode: KernelMode::Chebyshev,
            cmp_degree,
            ind_degree,
            ..KernelConfig::ideal()
        }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.input_range = (lo, hi);
        self
    }

    /// Sets the tie margin to half the declared minimum gap between
    /// distinct inputs.
    pub fn with_min_gap(mut self, gap: f64) -> Self {
        self.tie_margin = 0.5 * gap;
        self
    }

    pub fn with_tie_margin(mut self, gamma: f64) -> Self {
        self.tie_margin = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.input_range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Parameter(format!("input range [{lo}, {hi}] is empty")));
        }
        if self.cmp_degree < 1 || self.ind_degree < 1 {
            return Err(Error::Parameter("kernel degrees must be at least 1".into()));
        }
        if !(self.tie_margin >= 0.0) {
            return Err(Error::Parameter("tie margin must be non-negative".into()));
        }
        Ok(())
    }

    /// Levels consumed by one comparison kernel evaluation (d_C).
    pub fn cmp_depth(&self) -> u32 {
        match self.mode {
            KernelMode::Ideal => ideal_depth(self.cmp_degree),
            KernelMode::Chebyshev => ps_cost(self.cmp_degree, true).depth,
        }
    }

    /// Levels consumed by one indicator kernel evaluation (d_I).
    pub fn ind_depth(&self) -> u32 {
        match self.mode {
            KernelMode::Ideal => ideal_depth(self.ind_degree),
            KernelMode::Chebyshev => ps_cost(self.ind_degree, true).depth,
        }
    }

    /// Half-width of the symmetric interval the comparison polynomial is
    /// fitted on; covers `x - y` shifted by the tie margin.
    fn cmp_width(&self) -> f64 {
        self.input_range.1 - self.input_range.0 + self.tie_margin
    }
}

fn ideal_depth(degree: usize) -> u32 {
    let n = degree + 1;
    usize::BITS - (n - 1).leading_zeros()
}

/// Exact slotwise comparison: 1 if `x > y`, 0.5 on ties, 0 otherwise.
pub fn cmp_exact(x: f64, y: f64) -> f64 {
    if x > y {
        1.0
    } else if x == y {
        0.5
    } else {
        0.0
    }
}

/// Which comparison the ranking uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpVariant {
    /// 1 / 0.5 / 0 for `>`, `=`, `<`.
    Fractional,
    /// 1 iff `x > y`; every minimal element gets rank 1.
    Strict,
    /// 1 iff `x >= y`; every maximal element gets rank N.
    NonStrict,
}

impl CmpVariant {
    /// Exact comparison treating `|x - y| <= tol` as a tie.
    pub(crate) fn exact(self, x: f64, y: f64, tol: f64) -> f64 {
        let d = x - y;
        let tie = d.abs() <= tol;
        match self {
            CmpVariant::Fractional if tie => 0.5,
            CmpVariant::Fractional => cmp_exact(x, y),
            CmpVariant::Strict => f64::from(u8::from(!tie && d > 0.0)),
            CmpVariant::NonStrict => f64::from(u8::from(tie || d > 0.0)),
        }
    }

    /// Value the variant assigns to a self-comparison.
    pub(crate) fn diagonal(self) -> f64 {
        match self {
            CmpVariant::Fractional => 0.5,
            CmpVariant::Strict => 0.0,
            CmpVariant::NonStrict => 1.0,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum FitKey {
    Step {
        degree: usize,
        width: u64,
        smooth: u64,
    },
    Indicator {
        degree: usize,
        a: u64,
        b: u64,
        lo: u64,
        hi: u64,
    },
    Reciprocal {
        degree: usize,
        lo: u64,
        hi: u64,
    },
}

fn cached_fit(
    key: FitKey,
    build: impl FnOnce() -> Result<ChebyshevPolynomial>,
) -> Result<Arc<ChebyshevPolynomial>> {
    static CACHE: OnceLock<Mutex<HashMap<FitKey, Arc<ChebyshevPolynomial>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.lock().expect("fit cache poisoned").get(&key) {
        return Ok(Arc::clone(p));
    }
    let p = Arc::new(build()?);
    cache
        .lock()
        .expect("fit cache poisoned")
        .insert(key, Arc::clone(&p));
    Ok(p)
}

fn heaviside(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// Step with an erf transition of scale `s`: 0.5 at 0 and within 1e-12 of
/// the hard step once `|t| >= 5 s`. Unlike the hard step its Chebyshev
/// coefficients decay exponentially, so a fit is flat away from the jump.
fn smooth_step(t: f64, s: f64) -> f64 {
    0.5 * (1.0 + libm::erf(t / s))
}

/// The step polynomial used by the comparison kernels in Chebyshev mode.
///
/// With a tie margin `g`, the distances that matter are at least `g` from
/// the jump, so the fitted target is a step smoothed over `g / 5`. Without
/// one, the hard step is interpolated directly.
pub fn step_polynomial(cfg: &KernelConfig) -> Result<Arc<ChebyshevPolynomial>> {
    let w = cfg.cmp_width();
    let s = cfg.tie_margin / 5.0;
    cached_fit(
        FitKey::Step {
            degree: cfg.cmp_degree,
            width: w.to_bits(),
            smooth: s.to_bits(),
        },
        || {
            if s > 0.0 {
                ChebyshevPolynomial::fit(|t| smooth_step(t, s), (-w, w), cfg.cmp_degree)
            } else {
                ChebyshevPolynomial::fit(heaviside, (-w, w), cfg.cmp_degree)
            }
        },
    )
}

/// Box polynomial for `[a, b]`. The edges are smoothed over an eighth of
/// the box width (at most 1/8), so inputs on the rank grid, which sit at
/// least four scales from an edge, see 0 or 1 within 1e-8 once the degree
/// resolves the transition. A point exactly on an edge evaluates to 1/2.
pub fn indicator_polynomial(
    a: f64,
    b: f64,
    range: (f64, f64),
    degree: usize,
) -> Result<Arc<ChebyshevPolynomial>> {
    cached_fit(
        FitKey::Indicator {
            degree,
            a: a.to_bits(),
            b: b.to_bits(),
            lo: range.0.to_bits(),
            hi: range.1.to_bits(),
        },
        || {
            let s = (b - a).min(1.0) / 8.0;
            ChebyshevPolynomial::fit(|x| smooth_step(x - a, s) - smooth_step(x - b, s), range, degree)
        },
    )
}

fn cmp_shifted(
    sim: &Simulator,
    x: &Ciphertext,
    y: &Ciphertext,
    cfg: &KernelConfig,
    variant: CmpVariant,
) -> Result<Ciphertext> {
    cfg.validate()?;
    if cfg.mode == KernelMode::Chebyshev && variant != CmpVariant::Fractional && cfg.tie_margin <= 0.0 {
        return Err(Error::Parameter(
            "strict and non-strict comparisons need a positive tie margin in chebyshev mode".into(),
        ));
    }
    sim.note_cmp_eval();
    match cfg.mode {
        KernelMode::Ideal => sim.apply_exact("cmp", &[x, y], cfg.cmp_depth(), |a| {
            variant.exact(a[0], a[1], cfg.tie_margin)
        }),
        KernelMode::Chebyshev => {
            let diff = sim.sub(x, y)?;
            let diff = match variant {
                CmpVariant::Fractional => diff,
                CmpVariant::Strict => sim.add_scalar(&diff, -cfg.tie_margin)?,
                CmpVariant::NonStrict => sim.add_scalar(&diff, cfg.tie_margin)?,
            };
            ps_eval(sim, &diff, &*step_polynomial(cfg)?)
        }
    }
}

/// Comparison kernel: `cmp(x, y)` slotwise.
pub fn cmp_kernel(sim: &Simulator, x: &Ciphertext, y: &Ciphertext, cfg: &KernelConfig) -> Result<Ciphertext> {
    cmp_shifted(sim, x, y, cfg, CmpVariant::Fractional)
}

/// Strict comparison (`x > y`), realized in Chebyshev mode as
/// `cmp(x - tie_margin, y)`.
pub fn cmp_g_kernel(
    sim: &Simulator,
    x: &Ciphertext,
    y: &Ciphertext,
    cfg: &KernelConfig,
) -> Result<Ciphertext> {
    cmp_shifted(sim, x, y, cfg, CmpVariant::Strict)
}

/// Non-strict comparison (`x >= y`), realized in Chebyshev mode as
/// `cmp(x + tie_margin, y)`.
pub fn cmp_ge_kernel(
    sim: &Simulator,
    x: &Ciphertext,
    y: &Ciphertext,
    cfg: &KernelConfig,
) -> Result<Ciphertext> {
    cmp_shifted(sim, x, y, cfg, CmpVariant::NonStrict)
}

pub(crate) fn cmp_variant_kernel(
    sim: &Simulator,
    x: &Ciphertext,
    y: &Ciphertext,
    cfg: &KernelConfig,
    variant: CmpVariant,
) -> Result<Ciphertext> {
    cmp_shifted(sim, x, y, cfg, variant)
}

/// Indicator of the closed interval `[a, b]`; in Chebyshev mode the
/// polynomial is fitted over `cfg.input_range`.
pub fn ind_kernel(sim: &Simulator, x: &Ciphertext, a: f64, b: f64, cfg: &KernelConfig) -> Result<Ciphertext> {
    if !(a < b) {
        return Err(Error::Parameter(format!(
            "indicator interval [{a}, {b}] is empty"
        )));
    }
    cfg.validate()?;
    sim.note_ind_eval();
    match cfg.mode {
        KernelMode::Ideal => sim.apply_exact("ind", &[x], cfg.ind_depth(), |v| {
            f64::from(u8::from(a <= v[0] && v[0] <= b))
        }),
        KernelMode::Chebyshev => {
            let p = indicator_polynomial(a, b, cfg.input_range, cfg.ind_degree)?;
            ps_eval(sim, x, &p)
        }
    }
}

/// `4 c (1 - c)`: maps the 0.5 entries of a comparison to 1 and the 0/1
/// entries to 0. One ciphertext and one plaintext multiplication.
pub fn eq_from_cmp(sim: &Simulator, c: &Ciphertext) -> Result<Ciphertext> {
    let one_minus = sim.sub_from_plain(&sim.plain_fill(1.0), c)?;
    let prod = sim.mul(c, &one_minus)?;
    sim.mul_scalar(&prod, 4.0)
}

/// Levels consumed by [`goldschmidt_inverse`].
pub fn goldschmidt_depth(iters: u32) -> u32 {
    iters + 3
}

/// Goldschmidt reciprocal of values in `[m, big_m]`.
///
/// The seed `y0(x) = beta (m + M) - beta x` is the affine minimax
/// approximation of `1/x` on the range, so `x y0(x)` lies within
/// `(r-1)^2 / (r^2 + 6r + 1)` of 1 for `r = M/m`; each iteration squares
/// that error.
pub fn goldschmidt_inverse(
    sim: &Simulator,
    x: &Ciphertext,
    range: (f64, f64),
    iters: u32,
) -> Result<Ciphertext> {
    let (m, big_m) = range;
    if !(m > 0.0) || !(m <= big_m) {
        return Err(Error::Parameter(format!(
            "reciprocal range [{m}, {big_m}] must satisfy 0 < m <= M"
        )));
    }
    let needed = goldschmidt_depth(iters);
    if x.level() < needed {
        return Err(Error::DepthExhausted {
            op: "goldschmidt_inverse",
            stage: None,
            needed,
            available: x.level(),
        });
    }
    let beta = 8.0 / (4.0 * m * big_m + (m + big_m).powi(2));
    let alpha = beta * (m + big_m);
    let seed = sim.add_scalar(&sim.mul_scalar(x, -beta)?, alpha)?;
    let scaled = sim.mul(x, &seed)?;
    let mut b = sim.sub_from_plain(&sim.plain_fill(1.0), &scaled)?;
    let two_minus = sim.add_scalar(&b, 1.0)?;
    let mut a = sim.mul(&seed, &two_minus)?;
    for _ in 0..iters {
        b = sim.mul(&b, &b)?;
        let factor = sim.add_scalar(&b, 1.0)?;
        a = sim.mul(&a, &factor)?;
    }
    Ok(a)
}

/// Scalar model of [`goldschmidt_inverse`] for error analysis.
pub fn goldschmidt_scalar(x: f64, range: (f64, f64), iters: u32) -> f64 {
    let (m, big_m) = range;
    let beta = 8.0 / (4.0 * m * big_m + (m + big_m).powi(2));
    let seed = beta * (m + big_m) - beta * x;
    let mut b = 1.0 - x * seed;
    let mut a = seed * (1.0 + b);
    for _ in 0..iters {
        b *= b;
        a *= 1.0 + b;
    }
    a
}

pub fn reciprocal(
    sim: &Simulator,
    x: &Ciphertext,
    range: (f64, f64),
    cfg: &KernelConfig,
) -> Result<Ciphertext> {
    match cfg.reciprocal {
        Reciprocal::Goldschmidt => goldschmidt_inverse(sim, x, range, cfg.goldschmidt_iters),
        Reciprocal::Chebyshev(degree) => {
            if !(range.0 > 0.0) {
                return Err(Error::Parameter("reciprocal range must be positive".into()));
            }
            let p = cached_fit(
                FitKey::Reciprocal {
                    degree,
                    lo: range.0.to_bits(),
                    hi: range.1.to_bits(),
                },
                || ChebyshevPolynomial::fit(|v| 1.0 / v, range, degree),
            )?;
            ps_eval(sim, x, &p)
        }
    }
}

pub fn reciprocal_depth(cfg: &KernelConfig) -> u32 {
    match cfg.reciprocal {
        Reciprocal::Goldschmidt => goldschmidt_depth(cfg.goldschmidt_iters),
        Reciprocal::Chebyshev(degree) => ps_cost(degree, true).depth,
    }
}
