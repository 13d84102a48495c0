//! Distributional and sign properties of the estimators: plug-in forms
//! stay nonnegative after the rounding clamp, and the diagonal-deleted
//! two-sample statistic is centered when both samples share a law.

use kdisc::{hsic_v, ksd_v, mmd_u, mmd_v, KernelSpec, PairedSample, SampleMatrix, ScoreModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> SampleMatrix {
    let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    SampleMatrix::new(data, d).unwrap()
}

proptest! {
    #[test]
    fn plug_in_statistics_are_nonnegative(seed in 0u64..2000, lambda in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..10);
        let d = rng.gen_range(1..4);
        let m = rng.gen_range(2..10);
        let x = random_matrix(&mut rng, n, d);
        let y = random_matrix(&mut rng, m, d);
        let kernel = KernelSpec::gaussian(lambda).unwrap();

        prop_assert!(mmd_v(&kernel, &x, &y).unwrap() >= 0.0);

        let paired = PairedSample::new(x.clone(), random_matrix(&mut rng, n, 2)).unwrap();
        let ky = KernelSpec::laplace(lambda).unwrap();
        prop_assert!(hsic_v(&kernel, &ky, &paired).unwrap() >= 0.0);

        let score = ScoreModel::isotropic_gaussian(vec![0.0; d], 1.0).unwrap();
        prop_assert!(ksd_v(&kernel, &score, &x).unwrap() >= 0.0);
    }
}

#[test]
fn diagonal_deleted_two_sample_statistic_is_centered_under_equality() {
    // Both samples drawn from N(0,1): the diagonal-deleted statistic has
    // mean zero, so the Monte Carlo average over 2000 replicas must sit
    // within four standard errors of zero.
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let reps = 2000;
    let n = 20;
    let mut values = Vec::with_capacity(reps);
    for _ in 0..reps {
        let x: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let x = SampleMatrix::new(x, 1).unwrap();
        let y = SampleMatrix::new(y, 1).unwrap();
        values.push(mmd_u(&kernel, &x, &y).unwrap());
    }
    let mean = values.iter().sum::<f64>() / reps as f64;
    let var =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps as f64 - 1.0);
    let se = (var / reps as f64).sqrt();
    assert!(mean.abs() <= 4.0 * se, "mean {mean} exceeds 4 standard errors ({se})");
}
