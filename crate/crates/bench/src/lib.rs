//! Shared workloads for the criterion benches.

use hesort::{Ciphertext, HeParams, Simulator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` distinct-ish uniform values in `[0, 1)`.
pub fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// A noiseless simulator sized for a single `n x n` layout, with the
/// input already encrypted.
pub fn setup(n: usize, seed: u64) -> (Simulator, Ciphertext) {
    let slots = n.next_power_of_two().pow(2).max(4);
    let sim = Simulator::new(HeParams::new(slots, 128).expect("valid params")).expect("simulator");
    let ct = sim.encrypt(&uniform(n, seed)).expect("fits");
    (sim, ct)
}
