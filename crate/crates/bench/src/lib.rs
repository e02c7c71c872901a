//! Synthetic data generators shared by the benchmark targets.

use std::collections::BTreeSet;

use smileybench_core::corpus::Sample;
use smileybench_core::model::TrainSample;
use smileybench_core::numerics::{tag64, Pcg32, Tensor};

/// Dense matrix with standard-normal entries.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut rng = Pcg32::derive(seed, &[tag64("bench-matrix")]);
    let data = (0..rows * cols).map(|_| rng.normal() as f32).collect();
    Tensor::new(vec![rows, cols], data).expect("shape matches data")
}

/// Single-label training set with `c` clusters in `d_x` dimensions.
pub fn clustered_train_set(n: usize, c: usize, d_x: usize, seed: u64) -> Vec<TrainSample> {
    let mut rng = Pcg32::derive(seed, &[tag64("bench-clusters")]);
    let protos: Vec<Vec<f32>> = (0..c)
        .map(|_| (0..d_x).map(|_| rng.normal() as f32).collect())
        .collect();
    (0..n)
        .map(|i| {
            let cat = i % c;
            let input: Vec<f32> = protos[cat]
                .iter()
                .map(|&v| v + 0.1 * rng.normal() as f32)
                .collect();
            TrainSample {
                input: Tensor::vector(input).expect("non-empty input"),
                labels: BTreeSet::from([cat]),
            }
        })
        .collect()
}

/// Tweet stream with skewed category frequencies over 2016-2018.
pub fn skewed_stream(n: usize, c: usize, seed: u64) -> Vec<Sample> {
    let mut rng = Pcg32::derive(seed, &[tag64("bench-stream")]);
    let base_ts = 1_451_606_400i64; // 2016-01-01T00:00:00Z
    let span = 900 * 86_400;
    (0..n)
        .map(|i| {
            // Zipf-ish skew: category k is ~(k+1)^2 times rarer than 0.
            let mut cat = 0;
            while cat + 1 < c && rng.chance(0.5) {
                cat += 1;
            }
            Sample {
                sample_id: format!("b{i:07}#0"),
                image_ref: "b.ppm".into(),
                label_set: BTreeSet::from([cat]),
                timestamp: base_ts + rng.below(span) as i64,
                window_id: None,
            }
        })
        .collect()
}

/// Random scores plus single-label ground truth for metric benchmarks.
pub fn scored_batch(n: usize, c: usize, seed: u64) -> (Tensor, Tensor) {
    let mut rng = Pcg32::derive(seed, &[tag64("bench-scores")]);
    let p: Vec<f32> = (0..n * c).map(|_| rng.uniform_f32()).collect();
    let mut y = vec![0.0f32; n * c];
    for (i, row) in y.chunks_exact_mut(c).enumerate() {
        row[i % c] = 1.0;
    }
    (
        Tensor::new(vec![n, c], p).expect("scores fit shape"),
        Tensor::new(vec![n, c], y).expect("labels fit shape"),
    )
}
