//! Shared input builders for the benchmark suite.

use kdisc::{PairedSample, SampleMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic sample with entries uniform in (−2, 2).
pub fn seeded_matrix(seed: u64, n: usize, d: usize) -> SampleMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    SampleMatrix::new(data, d).expect("generated data is well formed")
}

/// Deterministic jointly observed sample with mild dependence between the
/// two streams.
pub fn seeded_paired(seed: u64, n: usize, d: usize) -> PairedSample {
    let x = seeded_matrix(seed, n, d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let data: Vec<f64> =
        x.data().iter().map(|v| 0.6 * v + 0.4 * rng.gen_range(-2.0..2.0)).collect();
    let y = SampleMatrix::new(data, d).expect("generated data is well formed");
    PairedSample::new(x, y).expect("row counts match")
}
