use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rtann::*;
use rtann_bench::{fixture, quick_mlp};

fn tree(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_tree");
    for n in [500, 2000, 8000] {
        let ds = fixture(Generator::FriedmanLike, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &ds, |b, ds| {
            b.iter(|| fit_tree(black_box(ds), &TreeConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn mlp(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_mlp");
    group.sample_size(10);
    for n in [500, 2000] {
        let ds = fixture(Generator::FriedmanLike, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &ds, |b, ds| {
            b.iter(|| fit_mlp(black_box(ds), &quick_mlp()).unwrap())
        });
    }
    group.finish();
}

fn hybrid(c: &mut Criterion) {
    let ds = fixture(Generator::FriedmanLike, 1000);
    let cfg = HybridConfig {
        mlp: quick_mlp(),
        ..HybridConfig::default()
    };
    let mut group = c.benchmark_group("hybrid");
    group.sample_size(10);
    group.bench_function("fit_1000", |b| {
        b.iter(|| fit_hybrid(black_box(&ds), &cfg).unwrap())
    });
    let model = fit_hybrid(&ds, &cfg).unwrap();
    group.bench_function("predict_1000_rows", |b| {
        b.iter(|| {
            ds.rows()
                .map(|x| predict_hybrid(&model, black_box(x)).unwrap())
                .sum::<f64>()
        })
    });
    group.finish();
}

criterion_group!(benches, tree, mlp, hybrid);
criterion_main!(benches);
