use criterion::{criterion_group, criterion_main, Criterion};
use formscan::nn::{init_mlp, Matrix, Regressor, TrainConfig};
use formscan_bench::{columns, demo};

fn training(c: &mut Criterion) {
    let ds = demo(1, 1000);
    let cols = columns(&ds, &["X1", "X3*X5", "X4*X5^2"]);
    let y = ds.output().values.clone();

    let x = Matrix::from_columns(&cols);
    let m = init_mlp(3, 1);
    let batch: Vec<usize> = (0..50).collect();
    let mut grad = vec![0.0; m.params().len()];
    c.bench_function("loss and gradient, batch 50", |b| b.iter(|| m.loss_and_grad(&x, &y, &batch, &mut grad)));

    let cfg = TrainConfig { steps: 1000, ..Default::default() };
    let mut g = c.benchmark_group("training");
    g.sample_size(10);
    g.bench_function("fit 1000 steps", |b| b.iter(|| Regressor::fit(&cols, &y, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, training);
criterion_main!(benches);
