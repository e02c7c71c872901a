use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use smileybench_bench::{clustered_train_set, random_matrix};
use smileybench_core::model::{
    loss_and_gradients, train_embedder, EmbedderParams, ModelConfig, TrainConfig,
};
use smileybench_core::numerics::{pca, sym_eig, Tensor};

fn bench_matmul(c: &mut Criterion) {
    let a = random_matrix(128, 256, 1);
    let b = random_matrix(256, 128, 2);
    c.bench_function("matmul_128x256x128", |bench| {
        bench.iter(|| black_box(&a).matmul(black_box(&b)).unwrap())
    });
}

fn bench_train_step(c: &mut Criterion) {
    let cfg = ModelConfig::new(192, 92, vec![128], 3);
    let params = EmbedderParams::init(&cfg).unwrap();
    let data = clustered_train_set(64, 92, 192, 4);
    let x = Tensor::new(
        vec![64, 192],
        data.iter().flat_map(|s| s.input.data().to_vec()).collect(),
    )
    .unwrap();
    let mut y = vec![0.0f32; 64 * 92];
    for (i, s) in data.iter().enumerate() {
        for &cat in &s.labels {
            y[i * 92 + cat] = 1.0;
        }
    }
    let y = Tensor::new(vec![64, 92], y).unwrap();
    c.bench_function("loss_and_gradients_b64", |bench| {
        bench.iter(|| loss_and_gradients(black_box(&params), &x, &y, 1e-7).unwrap())
    });
}

fn bench_train_loop(c: &mut Criterion) {
    let data = clustered_train_set(256, 16, 64, 5);
    let model_cfg = ModelConfig::new(64, 16, vec![], 6);
    let mut cfg = TrainConfig::new(50, 7);
    cfg.learning_rate = 0.05;
    cfg.batch_size = 64;
    cfg.log_every = 0;
    c.bench_function("train_embedder_50_iters", |bench| {
        bench.iter(|| train_embedder(black_box(&data), &model_cfg, &cfg).unwrap())
    });
}

fn bench_eig(c: &mut Criterion) {
    let n = 32;
    let a = random_matrix(64, n, 8);
    // Symmetric PSD matrix from A^T A.
    let g = a.matmul_at(&a).unwrap();
    let m: Vec<f64> = g.data().iter().map(|&v| v as f64).collect();
    c.bench_function("sym_eig_32", |bench| {
        bench.iter(|| sym_eig(black_box(&m), n).unwrap())
    });
}

fn bench_pca(c: &mut Criterion) {
    let x = random_matrix(500, 92, 9);
    c.bench_function("pca_500x92_k2", |bench| {
        bench.iter_batched(|| x.clone(), |x| pca(&x, 2).unwrap(), BatchSize::LargeInput)
    });
}

criterion_group!(
    benches,
    bench_matmul,
    bench_train_step,
    bench_train_loop,
    bench_eig,
    bench_pca
);
criterion_main!(benches);
