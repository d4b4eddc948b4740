use criterion::{black_box, criterion_group, criterion_main, Criterion};

use twinseq::{sweep, Engine, IsaxConfig, IsaxIndex, KvIndex, Materializer, TsIndex};
use twinseq_bench::{bench_query, bench_series, BENCH_L, BENCH_MODE};

fn build(c: &mut Criterion) {
    let series = bench_series();
    let mut group = c.benchmark_group("build");
    group.sample_size(10);
    group.bench_function("ts", |b| {
        b.iter(|| TsIndex::build(black_box(&series), BENCH_L, 10, 30, BENCH_MODE).unwrap())
    });
    group.bench_function("isax", |b| {
        b.iter(|| {
            IsaxIndex::build(
                black_box(&series),
                BENCH_L,
                IsaxConfig::default(),
                BENCH_MODE,
            )
            .unwrap()
        })
    });
    group.bench_function("kv", |b| {
        b.iter(|| KvIndex::build(black_box(&series), BENCH_L, 0.1, BENCH_MODE).unwrap())
    });
    group.finish();
}

fn query(c: &mut Criterion) {
    let series = bench_series();
    let frame = Materializer::new(&series, BENCH_L, BENCH_MODE).unwrap();
    let q = bench_query(&series, 7_777, 0.3);

    let ts = TsIndex::build(&series, BENCH_L, 10, 30, BENCH_MODE).unwrap();
    let isax = IsaxIndex::build(&series, BENCH_L, IsaxConfig::default(), BENCH_MODE).unwrap();
    let kv = KvIndex::build(&series, BENCH_L, 0.1, BENCH_MODE).unwrap();

    let mut group = c.benchmark_group("query");
    group.bench_function("sweep", |b| {
        b.iter(|| sweep::search_frame(black_box(&frame), black_box(&q)))
    });
    group.bench_function("ts", |b| {
        b.iter(|| ts.search(black_box(&frame), black_box(&q)).unwrap())
    });
    group.bench_function("isax", |b| {
        b.iter(|| Engine::search(&isax, black_box(&frame), black_box(&q)).unwrap())
    });
    group.bench_function("kv", |b| {
        b.iter(|| Engine::search(&kv, black_box(&frame), black_box(&q)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, build, query);
criterion_main!(benches);
