use std::fs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CliError, InputArgs};

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(format!("empty range [{lo}, {hi}]"));
    }
    Ok((lo, hi))
}

/// Values from one-per-line or a single comma-separated line. Blank lines
/// and `#` comments are skipped.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for field in line.split(',') {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let x: f64 = field
                .parse()
                .map_err(|_| CliError::Input(format!("line {}: `{field}` is not a number", n + 1)))?;
            if !x.is_finite() {
                return Err(CliError::Input(format!(
                    "line {}: `{field}` is not finite",
                    n + 1
                )));
            }
            out.push(x);
        }
    }
    Ok(out)
}

/// Uniform draws on `range`; each element after the first repeats an
/// earlier one with probability `tie_fraction`.
pub fn generate(count: usize, seed: u64, tie_fraction: f64, range: (f64, f64)) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<f64> = Vec::with_capacity(count);
    for i in 0..count {
        let x = if i > 0 && rng.random_bool(tie_fraction) {
            out[rng.random_range(0..i)]
        } else {
            rng.random_range(range.0..range.1)
        };
        out.push(x);
    }
    out
}

pub fn check_generator(count: usize, tie_fraction: f64) -> Result<(), CliError> {
    if count < 2 {
        return Err(CliError::Usage(format!(
            "--count must be at least 2, got {count}"
        )));
    }
    if !(0.0..=1.0).contains(&tie_fraction) {
        return Err(CliError::Usage(format!(
            "--tie-fraction must lie in [0, 1], got {tie_fraction}"
        )));
    }
    Ok(())
}

pub fn load(args: &InputArgs) -> Result<Vec<f64>, CliError> {
    match (&args.input, args.generator) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            let v = parse_values(&text)?;
            if v.len() < 2 {
                return Err(CliError::Input(format!(
                    "{} holds {} value(s); at least 2 are needed",
                    path.display(),
                    v.len()
                )));
            }
            Ok(v)
        }
        (None, Some(_)) => {
            check_generator(args.count, args.tie_fraction)?;
            Ok(generate(args.count, args.seed, args.tie_fraction, args.gen_range))
        }
        (None, None) => Err(CliError::Usage("one of --input or --gen is required".into())),
    }
}

/// Affine map of the input onto `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct Scale {
    pub lo: f64,
    pub hi: f64,
}

impl Scale {
    pub fn fit(v: &[f64]) -> Self {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Scale { lo, hi }
    }

    fn width(&self) -> f64 {
        if self.hi > self.lo {
            self.hi - self.lo
        } else {
            1.0
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        (x - self.lo) / self.width()
    }

    pub fn backward(&self, y: f64) -> f64 {
        self.lo + y * self.width()
    }

    pub fn describe(&self) -> String {
        format!(
            "# scale: x' = (x - {}) / {}",
            fmt_num(self.lo),
            fmt_num(self.width())
        )
    }
}

/// Shortest form of `x` after rounding to 12 decimals, so values that
/// went through the scaling round trip print as entered.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" | "" => "0".to_string(),
        _ => s.to_string(),
    }
}
