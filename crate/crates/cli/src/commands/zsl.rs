//! `zsl`: zero-shot sentiment straight from the emoji embedding.
//!
//! No target-task training happens here; the checkpoint's category
//! logits are combined with the taxonomy's sentiment annotations, under
//! both the signed (bin) and continuous (con) weightings. Ground truth
//! comes from a `zsl.labels` TSV (1 = positive, 0 = negative). Writes
//! `zsl_metrics.csv`.

use std::fs;

use smileybench_core::emoji::Sentiment;
use smileybench_core::model::{forward_f_batch, load_checkpoint, zsl_predict, ZslMode};
use smileybench_core::numerics::Tensor;
use smileybench_core::{Error, Result};

use crate::config::Ctx;

pub fn run(ctx: &Ctx) -> Result<()> {
    let tax = ctx.taxonomy()?;
    let ckpt = load_checkpoint(
        ctx.input_path("paths.checkpoint", "model.ckpt"),
        Some(&tax.digest()),
    )?;
    let ds = super::read_dataset(&ctx.input_path("paths.dataset", "dataset.jsonl"))?;
    let labels = super::read_label_map(&ctx.cfg.require_path("zsl.labels")?)?;

    let mut kept = Vec::new();
    let mut truth = Vec::new();
    for s in &ds {
        let Some(&class) = labels.get(&s.sample_id) else {
            continue;
        };
        if class > 1 {
            return Err(Error::Label(format!(
                "sample {}: zero-shot label must be 0 or 1, got {class}",
                s.sample_id
            )));
        }
        kept.push(s.clone());
        truth.push(if class == 1 {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        });
    }
    if kept.is_empty() {
        return Err(Error::EmptyBatch);
    }

    let x = super::design_matrix(&kept, &ctx.images_dir(), ckpt.model_cfg.d_x)?;
    let logits = forward_f_batch(&ckpt.params, &x)?;
    let c = tax.category_count();

    let mut hits_bin = 0u64;
    let mut hits_con = 0u64;
    for (i, want) in truth.iter().enumerate() {
        let row = Tensor::vector(logits.data()[i * c..(i + 1) * c].to_vec())?;
        if zsl_predict(&row, &tax, ZslMode::Bin)? == *want {
            hits_bin += 1;
        }
        if zsl_predict(&row, &tax, ZslMode::Con)? == *want {
            hits_con += 1;
        }
    }

    let n = kept.len() as f64;
    let mut csv = String::from("metric,k_or_class,value\n");
    csv.push_str(&format!("accuracy,bin,{}\n", hits_bin as f64 / n));
    csv.push_str(&format!("accuracy,con,{}\n", hits_con as f64 / n));
    csv.push_str(&format!("samples,,{}\n", kept.len()));
    fs::write(ctx.out_path("zsl_metrics.csv"), csv)?;

    eprintln!(
        "zsl: {} samples, bin {} con {}",
        kept.len(),
        hits_bin as f64 / n,
        hits_con as f64 / n
    );
    Ok(())
}
