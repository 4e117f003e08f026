#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

/// Average position of each element's tie group, via sorting.
pub fn fractional_rank_oracle(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && v[idx[end + 1]] == v[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end+1
        let avg = (start + end) as f64 / 2.0 + 1.0;
        for &i in &idx[start..=end] {
            out[i] = avg;
        }
        start = end + 1;
    }
    out
}

/// Fractional rank plus the positional tie offset: ties ranked in index order.
pub fn corrected_rank_oracle(v: &[f64]) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(j, &x)| {
            let less = v.iter().filter(|&&y| y < x).count();
            let equal_before = v[..j].iter().filter(|&&y| y == x).count();
            (less + equal_before + 1) as f64
        })
        .collect()
}

pub fn sort_oracle(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn is_permutation_of_1_to_n(r: &[f64]) -> bool {
    let mut seen = vec![false; r.len()];
    r.iter().all(|&x| {
        let k = x as usize;
        if x.fract() != 0.0 || k < 1 || k > r.len() || seen[k - 1] {
            return false;
        }
        seen[k - 1] = true;
        true
    })
}

/// Uniform draws in `[0, 1)`; with `tie_fraction` probability the vector
/// instead holds runs of repeated values drawn from a small pool.
pub fn random_vector(rng: &mut impl Rng, n: usize, tie_fraction: f64) -> Vec<f64> {
    if rng.random_bool(tie_fraction) {
        tied_vector(rng, n)
    } else {
        (0..n).map(|_| rng.random::<f64>()).collect()
    }
}

pub fn tied_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let pool_size = rng.random_range(1..=n.div_ceil(2).max(1));
    let pool: Vec<f64> = (0..pool_size).map(|_| rng.random::<f64>()).collect();
    let mut v: Vec<f64> = (0..n).map(|_| pool[rng.random_range(0..pool_size)]).collect();
    v.shuffle(rng);
    v
}

pub fn ceil_log2(n: usize) -> u64 {
    u64::from(n.next_power_of_two().trailing_zeros())
}
