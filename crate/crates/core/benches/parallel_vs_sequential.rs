use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pccdr::datasets::make_swiss_roll;
use pccdr::losses::{build_reference_set, correlation_loss};
use pccdr::{evaluate, init_random_normal, RunSeed};
use rayon::ThreadPoolBuilder;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("sequential", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn correlation(c: &mut Criterion) {
    let x = make_swiss_roll(2000, 0.0, RunSeed(0)).unwrap();
    let refs = build_reference_set(&x, 100, RunSeed(0)).unwrap();
    let emb = init_random_normal(2000, 2, RunSeed(1)).unwrap();
    let mut group = c.benchmark_group("correlation_loss");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| correlation_loss(&refs, &emb, 1.0).unwrap()))
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let x = make_swiss_roll(1000, 0.0, RunSeed(0)).unwrap();
    let emb = init_random_normal(1000, 2, RunSeed(1)).unwrap();
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| evaluate(&x, &emb, 25).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, correlation, metrics);
criterion_main!(benches);
