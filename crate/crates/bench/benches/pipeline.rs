use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use smileybench_bench::{scored_batch, skewed_stream};
use smileybench_core::analysis::spearman;
use smileybench_core::emoji::{extract_emojis, EmojiTaxonomy};
use smileybench_core::metrics::{macro_auc, mtopk, PredictionBatch};
use smileybench_core::numerics::{tag64, Pcg32};
use smileybench_core::sampler::{balanced_sample, SamplerConfig};

fn bench_extract(c: &mut Criterion) {
    let tax = EmojiTaxonomy::builtin();
    // Text mixing ASCII, a keycap (multi-scalar), and taxonomy faces.
    let text = "so happy today \u{1F600}\u{1F602} what a day #\u{FE0F}\u{20E3} \
                see you soon \u{2639}\u{FE0F} ok \u{1F62D}"
        .repeat(8);
    c.bench_function("extract_emojis_mixed_text", |bench| {
        bench.iter(|| extract_emojis(black_box(&text), &tax))
    });
}

fn bench_sampler(c: &mut Criterion) {
    let stream = skewed_stream(50_000, 16, 10);
    let start = chrono::NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
    let end = chrono::NaiveDate::from_ymd_opt(2018, 7, 31).unwrap();
    let mut cfg = SamplerConfig::new(start, end, 11);
    cfg.per_category_cap = 50;
    c.bench_function("balanced_sample_50k", |bench| {
        bench.iter(|| balanced_sample(black_box(&stream), 16, &cfg).unwrap())
    });
}

fn bench_metrics(c: &mut Criterion) {
    let (p, y) = scored_batch(1000, 92, 12);
    let batch = PredictionBatch::new(p, y).unwrap();
    c.bench_function("mtopk5_1000x92", |bench| {
        bench.iter(|| mtopk(black_box(&batch), 5).unwrap())
    });
    c.bench_function("macro_auc_1000x92", |bench| {
        bench.iter(|| macro_auc(black_box(&batch)).unwrap())
    });
}

fn bench_spearman(c: &mut Criterion) {
    let mut rng = Pcg32::derive(13, &[tag64("bench-spearman")]);
    let x: Vec<f64> = (0..2000).map(|_| rng.uniform_f64()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&v| v + 0.25 * rng.uniform_f64())
        .collect();
    c.bench_function("spearman_2000", |bench| {
        bench.iter(|| spearman(black_box(&x), black_box(&y)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_extract,
    bench_sampler,
    bench_metrics,
    bench_spearman
);
criterion_main!(benches);
