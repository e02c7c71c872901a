//! `transfer`: cross-validated transfer of the embedding to a labeled
//! target task.
//!
//! Target labels come from a `transfer.labels` TSV keyed by sample id;
//! dataset samples without a label are ignored. Each fold retrains the
//! head (and, in finetune mode, the embedder) from the checkpoint and
//! scores accuracy on the held-out fold. Writes `transfer_metrics.csv`.

use std::fs;

use smileybench_core::metrics::{accuracy, kfold_cv};
use smileybench_core::model::{
    load_checkpoint, predict_class, train_transfer, HeadActivation, HeadConfig, TrainConfig,
    TransferMode, TransferSample,
};
use smileybench_core::numerics::Tensor;
use smileybench_core::{ppm, Error, Result};

use crate::config::Ctx;

pub fn run(ctx: &Ctx) -> Result<()> {
    let tax = ctx.taxonomy()?;
    let ckpt = load_checkpoint(
        ctx.input_path("paths.checkpoint", "model.ckpt"),
        Some(&tax.digest()),
    )?;
    let ds = super::read_dataset(&ctx.input_path("paths.dataset", "dataset.jsonl"))?;
    let labels = super::read_label_map(&ctx.cfg.require_path("transfer.labels")?)?;

    let images_dir = ctx.images_dir();
    let mut data: Vec<TransferSample> = Vec::new();
    for s in &ds {
        let Some(&class) = labels.get(&s.sample_id) else {
            continue;
        };
        let img = ppm::load_ppm(images_dir.join(&s.image_ref))?;
        data.push(TransferSample {
            input: Tensor::vector(img.data().to_vec())?,
            class,
        });
    }
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }

    let classes = ctx.cfg.get_usize("transfer.classes")?.unwrap_or(2);
    let activation = match ctx.cfg.get("transfer.activation").unwrap_or("softmax") {
        "softmax" => HeadActivation::Softmax,
        "sigmoid" => HeadActivation::Sigmoid,
        other => {
            return Err(Error::Parse(format!(
                "config: unknown transfer.activation {other:?}"
            )))
        }
    };
    let mode = match ctx.cfg.get("transfer.mode").unwrap_or("frozen") {
        "frozen" => TransferMode::Frozen,
        "finetune" => TransferMode::Finetune,
        other => {
            return Err(Error::Parse(format!(
                "config: unknown transfer.mode {other:?}"
            )))
        }
    };
    let folds = ctx.cfg.get_usize("transfer.folds")?.unwrap_or(5);

    let head_cfg = HeadConfig::new(classes, activation, ctx.stage_seed("transfer-head"));
    let mut tc = TrainConfig::new(
        ctx.cfg.get_u64("transfer.iterations")?.unwrap_or(300),
        ctx.stage_seed("transfer-train"),
    );
    tc.learning_rate = ctx.cfg.get_f32("transfer.learning_rate")?.unwrap_or(0.01);
    tc.batch_size = ctx.cfg.get_usize("transfer.batch_size")?.unwrap_or(32);
    tc.log_every = 0;

    let result = kfold_cv(
        data.len(),
        folds,
        ctx.stage_seed("transfer-folds"),
        |train_idx, test_idx| {
            let train: Vec<TransferSample> =
                train_idx.iter().map(|&i| data[i].clone()).collect();
            let (head, embedder, _history) =
                train_transfer(&ckpt.params, &train, &head_cfg, mode, &tc)?;
            let preds: Vec<usize> = test_idx
                .iter()
                .map(|&i| predict_class(&embedder, &head, &data[i].input))
                .collect::<Result<_>>()?;
            let truth: Vec<usize> = test_idx.iter().map(|&i| data[i].class).collect();
            accuracy(&preds, &truth)
        },
    )?;

    let mut csv = String::from("metric,k_or_class,value\n");
    for (i, acc) in result.per_fold.iter().enumerate() {
        csv.push_str(&format!("fold_accuracy,{i},{acc}\n"));
    }
    csv.push_str(&format!("mean_accuracy,,{}\n", result.mean));
    fs::write(ctx.out_path("transfer_metrics.csv"), csv)?;

    eprintln!(
        "transfer: mean accuracy {} over {} folds ({} labeled samples)",
        result.mean,
        folds,
        data.len()
    );
    Ok(())
}
