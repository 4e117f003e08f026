//! Chebyshev interpolation and Paterson-Stockmeyer evaluation on ciphertexts.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sim::{Ciphertext, Simulator};

/// `p(x) = sum c_k T_k(t)` where `t` is `x` mapped affinely from
/// `[lo, hi]` onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevPolynomial {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl ChebyshevPolynomial {
    pub fn new(interval: (f64, f64), coeffs: Vec<f64>) -> Result<Self> {
        let (lo, hi) = interval;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Parameter(format!(
                "interval [{lo}, {hi}] is empty or not finite"
            )));
        }
        if coeffs.is_empty() {
            return Err(Error::Parameter(
                "polynomial needs at least one coefficient".into(),
            ));
        }
        Ok(ChebyshevPolynomial { lo, hi, coeffs })
    }

    /// Degree-`degree` interpolant of `f` at the Chebyshev nodes of the
    /// first kind mapped onto `interval`.
    pub fn fit(f: impl Fn(f64) -> f64, interval: (f64, f64), degree: usize) -> Result<Self> {
        let (lo, hi) = interval;
        if !(lo < hi) {
            return Err(Error::Parameter(format!("interval [{lo}, {hi}] is empty")));
        }
        let n = degree + 1;
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let values = (0..n)
            .map(|k| {
                // cos(pi (k + 1/2) / n) written as a sine so the middle node of
                // an odd count is exactly 0 and the nodes are exactly symmetric
                let t = (PI * (n as f64 - 2.0 * k as f64 - 1.0) / (2 * n) as f64).sin();
                let y = f(mid + half * t);
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(Error::Fit(format!(
                        "target is not finite at x = {}",
                        mid + half * t
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;

        // c_j = 2/n sum_k f(x_k) cos(pi j (2k+1) / 2n); the angle index is
        // reduced mod 4n so large degrees keep full precision.
        let period = 4 * n;
        let coeffs = (0..n)
            .map(|j| {
                let acc: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(k, &y)| {
                        let idx = (j * (2 * k + 1)) % period;
                        y * (PI * idx as f64 / (2 * n) as f64).cos()
                    })
                    .sum();
                let c = 2.0 * acc / n as f64;
                if j == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect();
        Ok(ChebyshevPolynomial { lo, hi, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn is_unit_interval(&self) -> bool {
        self.lo == -1.0 && self.hi == 1.0
    }

    /// Scalar evaluation with Clenshaw's recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - (self.lo + self.hi)) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }
}

/// Static cost of evaluating a dense degree-`d` polynomial with [`ps_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsCost {
    pub baby_step: usize,
    pub ctct_mults: u64,
    /// Levels consumed, including the input normalization when present.
    pub depth: u32,
}

fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

fn giant_steps(baby: usize, degree: usize) -> Vec<usize> {
    let mut giants = Vec::new();
    let mut g = baby;
    while g <= degree {
        giants.push(g);
        g *= 2;
    }
    giants
}

/// Non-scalar multiplications spent on the recursive split of a dense
/// polynomial of degree `deg`.
fn split_mults(deg: usize, baby: usize, giants: &[usize]) -> u64 {
    if deg < baby {
        return 0;
    }
    let m = *giants
        .iter()
        .rev()
        .find(|&&g| g <= deg)
        .expect("giant step exists");
    let qdeg = deg - m;
    let q = if qdeg == 0 {
        0
    } else {
        1 + split_mults(qdeg, baby, giants)
    };
    q + split_mults(m - 1, baby, giants)
}

fn cost_for(degree: usize, baby: usize) -> u64 {
    if degree < baby {
        return degree.saturating_sub(1) as u64;
    }
    let giants = giant_steps(baby, degree);
    (baby as u64 - 1) + (giants.len() as u64 - 1) + split_mults(degree, baby, &giants)
}

fn choose_baby_step(degree: usize) -> usize {
    let mut best = (u64::MAX, 2);
    let mut k = 2;
    while k <= (degree + 1).next_power_of_two().max(2) {
        let c = cost_for(degree, k);
        if c < best.0 {
            best = (c, k);
        }
        k *= 2;
    }
    best.1
}

pub fn ps_cost(degree: usize, normalize: bool) -> PsCost {
    let norm = u32::from(normalize);
    if degree == 0 {
        return PsCost {
            baby_step: 1,
            ctct_mults: 0,
            depth: 0,
        };
    }
    let baby = choose_baby_step(degree);
    PsCost {
        baby_step: baby,
        ctct_mults: cost_for(degree, baby),
        depth: tree_depth(degree, baby) + norm,
    }
}

/// Level depth of T_j built by doubling from T_1.
fn basis_depth(j: usize) -> u32 {
    ceil_log2(j)
}

fn tree_depth(deg: usize, baby: usize) -> u32 {
    if deg < baby {
        // leaf: scalar multiples of T_1..T_deg
        return if deg == 0 { 0 } else { basis_depth(deg) + 1 };
    }
    let giants = giant_steps(baby, deg);
    fn rec(deg: usize, baby: usize, giants: &[usize]) -> u32 {
        if deg < baby {
            return if deg == 0 { 0 } else { basis_depth(deg) + 1 };
        }
        let m = *giants.iter().rev().find(|&&g| g <= deg).unwrap();
        let gd = basis_depth(m);
        let qdeg = deg - m;
        let prod = if qdeg == 0 {
            gd + 1
        } else {
            rec(qdeg, baby, giants).max(gd) + 1
        };
        prod.max(rec(m - 1, baby, giants))
    }
    rec(deg, baby, &giants)
}

/// Divides `p` (Chebyshev coefficients, degree < 2m) by `T_m`, returning
/// `(q, r)` with `p = q * T_m + r` and `deg r < m`.
fn cheb_divide(p: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut r = p.to_vec();
    let deg = p.len() - 1;
    let mut q = vec![0.0; deg - m + 1];
    for i in (m..=deg).rev() {
        let c = r[i];
        r[i] = 0.0;
        let j = i - m;
        if j == 0 {
            q[0] += c;
        } else {
            // T_{m+j} = 2 T_m T_j - T_{m-j}
            q[j] += 2.0 * c;
            r[m - j] -= c;
        }
    }
    r.truncate(m);
    (q, r)
}

enum Value {
    Const(f64),
    Ct(Ciphertext),
}

struct PsEvaluator<'a> {
    sim: &'a Simulator,
    basis: Vec<Ciphertext>, // basis[j] = T_j for j in 1..baby (index 0 unused)
    giants: Vec<(usize, Ciphertext)>,
    baby: usize,
}

impl PsEvaluator<'_> {
    fn eval(&self, coeffs: &[f64]) -> Result<Value> {
        let deg = coeffs.len() - 1;
        if deg < self.baby {
            return self.leaf(coeffs);
        }
        let (m, g) = self
            .giants
            .iter()
            .rev()
            .find(|(m, _)| *m <= deg)
            .expect("giant step exists");
        let (q, r) = cheb_divide(coeffs, *m);
        let prod = match self.eval(&q)? {
            Value::Const(c) => self.sim.mul_scalar(g, c)?,
            Value::Ct(qc) => self.sim.mul(&qc, g)?,
        };
        self.combine(prod, self.eval(&r)?)
    }

    fn leaf(&self, coeffs: &[f64]) -> Result<Value> {
        let mut acc: Option<Ciphertext> = None;
        for (j, &c) in coeffs.iter().enumerate().skip(1) {
            if c == 0.0 {
                continue;
            }
            let term = self.sim.mul_scalar(&self.basis[j], c)?;
            acc = Some(match acc {
                None => term,
                Some(a) => self.sim.add(&a, &term)?,
            });
        }
        match acc {
            None => Ok(Value::Const(coeffs[0])),
            Some(a) if coeffs[0] != 0.0 => Ok(Value::Ct(self.sim.add_scalar(&a, coeffs[0])?)),
            Some(a) => Ok(Value::Ct(a)),
        }
    }

    fn combine(&self, prod: Ciphertext, rest: Value) -> Result<Value> {
        Ok(Value::Ct(match rest {
            Value::Const(0.0) => prod,
            Value::Const(c) => self.sim.add_scalar(&prod, c)?,
            Value::Ct(r) => self.sim.add(&prod, &r)?,
        }))
    }
}

/// `2 a b - c` with the doubling done by addition so it costs no level.
fn double_product_minus(
    sim: &Simulator,
    a: &Ciphertext,
    b: &Ciphertext,
    minus: Option<&Ciphertext>,
) -> Result<Ciphertext> {
    let p = sim.mul(a, b)?;
    let two_p = sim.add(&p, &p)?;
    match minus {
        Some(c) => sim.sub(&two_p, c),
        None => sim.add_scalar(&two_p, -1.0),
    }
}

/// Evaluates `p` slotwise on `x` with the Paterson-Stockmeyer scheme in
/// Chebyshev basis: baby steps `T_1..T_k`, giant steps `T_k, T_2k, ...`,
/// and recursive division by the largest giant step.
pub fn ps_eval(sim: &Simulator, x: &Ciphertext, p: &ChebyshevPolynomial) -> Result<Ciphertext> {
    let degree = p.degree();
    if degree == 0 {
        let zero = sim.sub(x, x)?;
        return sim.add_scalar(&zero, p.coeffs[0]);
    }
    let cost = ps_cost(degree, !p.is_unit_interval());
    if x.level() < cost.depth {
        return Err(Error::DepthExhausted {
            op: "ps_eval",
            stage: None,
            needed: cost.depth,
            available: x.level(),
        });
    }
    let t = if p.is_unit_interval() {
        x.clone()
    } else {
        let scale = 2.0 / (p.hi - p.lo);
        let shift = -(p.hi + p.lo) / (p.hi - p.lo);
        sim.add_scalar(&sim.mul_scalar(x, scale)?, shift)?
    };

    let baby = cost.baby_step;
    let top = baby.min(degree);
    let mut basis: Vec<Ciphertext> = Vec::with_capacity(top + 1);
    basis.push(t.clone()); // placeholder for T_0, never read
    basis.push(t.clone());
    for j in 2..=top {
        let next = if j % 2 == 0 {
            double_product_minus(sim, &basis[j / 2], &basis[j / 2], None)?
        } else {
            double_product_minus(sim, &basis[j / 2 + 1], &basis[j / 2], Some(&basis[1]))?
        };
        basis.push(next);
    }

    let mut giants = Vec::new();
    if baby <= degree {
        giants.push((baby, basis[baby].clone()));
        let mut m = baby * 2;
        while m <= degree {
            let prev = &giants.last().unwrap().1;
            let g = double_product_minus(sim, prev, prev, None)?;
            giants.push((m, g));
            m *= 2;
        }
    }

    let ev = PsEvaluator {
        sim,
        basis,
        giants,
        baby,
    };
    match ev.eval(&p.coeffs)? {
        Value::Ct(c) => Ok(c),
        Value::Const(c) => {
            let zero = sim.sub(x, x)?;
            sim.add_scalar(&zero, c)
        }
    }
}
