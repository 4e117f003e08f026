//! Plaintext reference computations for error reporting.

use std::cmp::Ordering;

/// Fractional ranks: ties get the mean of the positions they span.
pub fn fractional_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let below = v.iter().filter(|&&y| y < x).count();
            let equal = v.iter().filter(|&&y| y == x).count();
            below as f64 + (equal as f64 + 1.0) / 2.0
        })
        .collect()
}

/// Ranks forming a permutation of `1..=len`, ties ordered by position.
pub fn corrected_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap_or(Ordering::Equal));
    let mut out = vec![0.0; v.len()];
    for (r, &i) in idx.iter().enumerate() {
        out[i] = (r + 1) as f64;
    }
    out
}

pub fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// `k`-th smallest, 1-based.
pub fn kth_smallest(v: &[f64], k: usize) -> Option<f64> {
    sorted(v).get(k.checked_sub(1)?).copied()
}

pub fn median(v: &[f64]) -> Option<f64> {
    let s = sorted(v);
    let n = s.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(s[n / 2]),
        _ => Some(0.5 * (s[n / 2 - 1] + s[n / 2])),
    }
}

/// Mean and maximum absolute difference.
pub fn abs_errors(got: &[f64], want: &[f64]) -> (f64, f64) {
    if want.is_empty() {
        return (0.0, 0.0);
    }
    let diffs = got.iter().zip(want).map(|(a, b)| (a - b).abs());
    let (total, worst) = diffs.fold((0.0, 0.0f64), |(t, w), d| (t + d, w.max(d)));
    (total / want.len() as f64, worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn references() {
        assert_eq!(
            fractional_ranks(&[50.0, 10.0, 20.0, 20.0, 40.0]),
            vec![5.0, 1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(
            corrected_ranks(&[10.0, 20.0, 20.0, 40.0]),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(kth_smallest(&[3.0, 1.0, 2.0], 2), Some(2.0));
        assert_eq!(kth_smallest(&[3.0], 0), None);
        assert_eq!(median(&[20.0, 30.0, 10.0, 40.0]), Some(25.0));
        assert_eq!(abs_errors(&[1.0, 2.0], &[1.5, 2.0]), (0.25, 0.5));
    }
}
