use criterion::{black_box, criterion_group, criterion_main, Criterion};
use kdisc::{
    adaptive_mmd, default_collection, median_bandwidth, PoolRequest, StatKind,
};
use kdisc_bench::seeded_matrix;

fn adaptive_pooling(c: &mut Criterion) {
    let x = seeded_matrix(31, 192, 4);
    let y = seeded_matrix(32, 192, 4);
    let pooled = x.vstack(&y).unwrap();
    let collection = default_collection(&pooled).unwrap();

    let mut group = c.benchmark_group("pooling");
    group.bench_function("normalized_fuse_20_kernels_192", |b| {
        b.iter(|| {
            black_box(
                adaptive_mmd(
                    &collection,
                    &StatKind::PairedU,
                    &x,
                    &y,
                    PoolRequest::Fuse(None),
                    true,
                )
                .unwrap(),
            )
        })
    });
    group.bench_function("collection_build_384", |b| {
        b.iter(|| black_box(default_collection(&pooled).unwrap()))
    });
    group.bench_function("median_bandwidth_384", |b| {
        b.iter(|| black_box(median_bandwidth(&pooled, 2.0).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, adaptive_pooling);
criterion_main!(benches);
