use criterion::{criterion_group, criterion_main, Criterion};
use formscan::correlation::{rank_library, RankOptions, Scorer};
use formscan::generator::{eligible_features, Library};
use formscan::GeneratorConfig;
use formscan_bench::demo;

fn scoring(c: &mut Criterion) {
    let ds = demo(1, 2000);
    let active = eligible_features(&ds);
    let cfg = GeneratorConfig::default();
    let y = &ds.output().values;
    let scorer = Scorer::new(y).unwrap();
    let opts = RankOptions { top_k: 20, pool_factor: 10, dedup_threshold: Some(0.9999), iteration: 0 };

    let mut g = c.benchmark_group("scoring");
    g.sample_size(10);
    g.bench_function("build library", |b| b.iter(|| Library::build(&ds, &cfg, &active).unwrap()));
    let lib = Library::build(&ds, &cfg, &active).unwrap();
    g.bench_function("rank library", |b| b.iter(|| rank_library(&lib, &ds, &scorer, &opts)));
    g.bench_function("scorer", |b| b.iter(|| Scorer::new(y).unwrap()));
    g.finish();
}

criterion_group!(benches, scoring);
criterion_main!(benches);
