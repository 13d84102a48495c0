//! Property tests for pooling: the fuse bracket and its monotonicity, the
//! linearity identity connecting mean pooling to the averaged kernel, the
//! scale invariance of normalized statistics, and reproducibility of
//! adaptive runs on subsampled designs.

use kdisc::{
    adaptive_hsic, adaptive_mmd, generic_statistic, pool, sigma, Design, KernelCollection,
    KernelSpec, PairCore, PairedSample, PoolMethod, PoolRequest, SampleMatrix, StatKind,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> SampleMatrix {
    let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    SampleMatrix::new(data, d).unwrap()
}

#[test]
fn fuse_stays_in_its_bracket_on_a_hundred_lists() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let k = rng.gen_range(2..12);
        let values: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for nu in [0.1, 1.0, 10.0, 1000.0] {
            let fused = pool(&values, PoolMethod::Fuse(nu)).unwrap();
            assert!(fused <= max + 1e-12);
            assert!(fused >= max - (k as f64).ln() / nu - 1e-12);
        }
    }
}

#[test]
fn fuse_with_a_huge_parameter_is_the_max() {
    let values = [0.31, -0.7, 0.29, 0.304, -1.2];
    let max = pool(&values, PoolMethod::Max).unwrap();
    let fused = pool(&values, PoolMethod::Fuse(1e6)).unwrap();
    // The bound is attained exactly here (sub-max terms underflow), so
    // allow rounding slack on the comparison.
    assert!((fused - max).abs() <= 5.0f64.ln() / 1e6 + 1e-12);
}

proptest! {
    // At moderate sharpness every argument carries visible weight, so the
    // fused value must strictly grow when any single entry grows.
    #[test]
    fn fuse_is_strictly_monotone_in_each_argument(
        values in prop::collection::vec(-3.0f64..3.0, 2..8),
        nu in 0.05f64..2.0,
        bump in 0.1f64..1.0,
    ) {
        let fused = pool(&values, PoolMethod::Fuse(nu)).unwrap();
        for i in 0..values.len() {
            let mut bumped = values.clone();
            bumped[i] += bump;
            prop_assert!(pool(&bumped, PoolMethod::Fuse(nu)).unwrap() > fused);
        }
    }

    // Rescaling a core by c > 0 rescales the statistic and its normalizer
    // together, so the normalized value is unchanged.
    #[test]
    fn normalized_statistics_ignore_core_scale(
        seed in 0u64..1000,
        exponent in -3.0f64..3.0,
    ) {
        struct Scaled<'a, C: PairCore> {
            inner: &'a C,
            factor: f64,
        }
        impl<C: PairCore> PairCore for Scaled<'_, C> {
            fn len(&self) -> usize {
                self.inner.len()
            }
            fn eval(&self, i: usize, j: usize) -> f64 {
                self.factor * self.inner.eval(i, j)
            }
        }

        let c = 10.0f64.powf(exponent);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, 6, 2);
        let y = random_matrix(&mut rng, 6, 2);
        let kernel = KernelSpec::gaussian(1.0).unwrap();
        let core = kdisc::MmdPairedCore::new(&kernel, &x, &y).unwrap();
        let scaled = Scaled { inner: &core, factor: c };
        let design = Design::Distinct;

        let base =
            generic_statistic(&core, &design).unwrap().value / sigma(&core, &design).unwrap();
        let moved = generic_statistic(&scaled, &design).unwrap().value
            / sigma(&scaled, &design).unwrap();
        prop_assert!(
            (base - moved).abs() <= 1e-12 * base.abs().max(1.0),
            "{} vs {} at c={}", base, moved, c
        );
    }
}

fn gram(kernel_values: impl Fn(usize, usize) -> f64, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| kernel_values(i, j)).collect()).collect()
}

fn hsic_v_from_grams(kx: &[Vec<f64>], ky: &[Vec<f64>]) -> f64 {
    let n = kx.len();
    let nf = n as f64;
    let row_means: Vec<f64> = kx.iter().map(|r| r.iter().sum::<f64>() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let centered = kx[i][j] - row_means[i] - row_means[j] + grand;
            total += centered * ky[i][j];
        }
    }
    total / (nf * nf)
}

fn hsic_u_from_grams(kx: &[Vec<f64>], ky: &[Vec<f64>]) -> f64 {
    let n = kx.len();
    let nf = n as f64;
    let tilde = |k: &[Vec<f64>], i: usize, j: usize| if i == j { 0.0 } else { k[i][j] };
    let mut trace = 0.0;
    let mut sum_x = 0.0;
    let mut sum_y = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        for j in 0..n {
            trace += tilde(kx, i, j) * tilde(ky, i, j);
            sum_x += tilde(kx, i, j);
            sum_y += tilde(ky, i, j);
            for r in 0..n {
                cross += tilde(kx, i, j) * tilde(ky, j, r);
            }
        }
    }
    (trace + sum_x * sum_y / ((nf - 1.0) * (nf - 2.0)) - 2.0 * cross / (nf - 2.0))
        / (nf * (nf - 3.0))
}

#[test]
fn mean_pooling_equals_the_mean_kernel_statistic() {
    // Plug-in and diagonal-deleted statistics are linear in the kernel
    // (for dependence statistics: in the first-stream kernel), so mean
    // pooling matches a single statistic under the averaged kernel.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for instance in 0..20 {
        let n = rng.gen_range(6..10);
        let d = rng.gen_range(1..3);
        let x = random_matrix(&mut rng, n, d);
        let y = random_matrix(&mut rng, n, d);
        let kernels = vec![
            KernelSpec::gaussian(rng.gen_range(0.4..2.0)).unwrap(),
            KernelSpec::laplace(rng.gen_range(0.4..2.0)).unwrap(),
            KernelSpec::gaussian(rng.gen_range(0.4..2.0)).unwrap(),
        ];
        let kbar = |a: &[f64], b: &[f64]| -> f64 {
            kernels.iter().map(|k| k.evaluate(a, b).unwrap()).sum::<f64>() / kernels.len() as f64
        };
        let collection = KernelCollection::explicit(kernels.clone()).unwrap();

        // Two-sample plug-in form.
        let pooled_v =
            adaptive_mmd(&collection, &StatKind::V, &x, &y, PoolRequest::Mean, false).unwrap();
        let nf = n as f64;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        let mut sxy = 0.0;
        for i in 0..n {
            for j in 0..n {
                sxx += kbar(x.row(i), x.row(j));
                syy += kbar(y.row(i), y.row(j));
                sxy += kbar(x.row(i), y.row(j));
            }
        }
        let direct_v = sxx / (nf * nf) - 2.0 * sxy / (nf * nf) + syy / (nf * nf);
        assert!(
            (pooled_v.pooled - direct_v).abs() <= 1e-10 * direct_v.abs().max(1.0),
            "instance {instance}: {} vs {direct_v}",
            pooled_v.pooled
        );

        // Two-sample diagonal-deleted form.
        let pooled_u =
            adaptive_mmd(&collection, &StatKind::U, &x, &y, PoolRequest::Mean, false).unwrap();
        let mut uxx = 0.0;
        let mut uyy = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    uxx += kbar(x.row(i), x.row(j));
                    uyy += kbar(y.row(i), y.row(j));
                }
            }
        }
        let direct_u =
            uxx / (nf * (nf - 1.0)) - 2.0 * sxy / (nf * nf) + uyy / (nf * (nf - 1.0));
        assert!(
            (pooled_u.pooled - direct_u).abs() <= 1e-10 * direct_u.abs().max(1.0),
            "instance {instance}: {} vs {direct_u}",
            pooled_u.pooled
        );

        // Dependence forms: vary the first-stream kernel, share the second.
        let ky = KernelSpec::gaussian(1.0).unwrap();
        let pairs: Vec<_> = kernels.iter().map(|k| (k.clone(), ky.clone())).collect();
        let pair_collection = KernelCollection::explicit_pairs(pairs).unwrap();
        let z = PairedSample::new(x.clone(), y.clone()).unwrap();
        let kxbar = gram(|i, j| kbar(x.row(i), x.row(j)), n);
        let kygram = gram(|i, j| ky.evaluate(y.row(i), y.row(j)).unwrap(), n);

        let pooled_hv =
            adaptive_hsic(&pair_collection, &StatKind::V, &z, PoolRequest::Mean, false).unwrap();
        let direct_hv = hsic_v_from_grams(&kxbar, &kygram);
        assert!(
            (pooled_hv.pooled - direct_hv).abs() <= 1e-10 * direct_hv.abs().max(1.0),
            "instance {instance}: {} vs {direct_hv}",
            pooled_hv.pooled
        );

        let pooled_hu =
            adaptive_hsic(&pair_collection, &StatKind::U, &z, PoolRequest::Mean, false).unwrap();
        let direct_hu = hsic_u_from_grams(&kxbar, &kygram);
        assert!(
            (pooled_hu.pooled - direct_hu).abs() <= 1e-10 * direct_hu.abs().max(1.0),
            "instance {instance}: {} vs {direct_hu}",
            pooled_hu.pooled
        );
    }
}

#[test]
fn adaptive_runs_on_subsampled_designs_reproduce_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let x = random_matrix(&mut rng, 25, 2);
    let y = random_matrix(&mut rng, 25, 2);
    let collection = KernelCollection::explicit(vec![
        KernelSpec::gaussian(0.7).unwrap(),
        KernelSpec::laplace(1.3).unwrap(),
    ])
    .unwrap();
    let kind = StatKind::Incomplete(Design::Random { m: 40, with_replacement: false, seed: 5 });
    let first =
        adaptive_mmd(&collection, &kind, &x, &y, PoolRequest::Fuse(None), true).unwrap();
    let second =
        adaptive_mmd(&collection, &kind, &x, &y, PoolRequest::Fuse(None), true).unwrap();
    assert_eq!(first, second);
    for (a, b) in first.raw_values.iter().zip(&second.raw_values) {
        assert_eq!(a.to_bits(), b.to_bits());
    }

    let other_seed =
        StatKind::Incomplete(Design::Random { m: 40, with_replacement: false, seed: 6 });
    let third =
        adaptive_mmd(&collection, &other_seed, &x, &y, PoolRequest::Fuse(None), true).unwrap();
    assert_ne!(first.raw_values, third.raw_values);
}
