//! `eval`: score a checkpoint on the test split.
//!
//! Writes `eval_metrics.csv` with `metric,k_or_class,value` rows: mTop-k
//! for k in {1, 3, 5} (clipped to the category count) plus macro-averaged
//! ROC AUC and the excluded/skipped tallies that qualify them.

use std::fs;

use smileybench_core::metrics::{macro_auc, mtopk, PredictionBatch};
use smileybench_core::model::{forward_h_batch, load_checkpoint};
use smileybench_core::Result;

use crate::config::Ctx;

pub fn run(ctx: &Ctx) -> Result<()> {
    let tax = ctx.taxonomy()?;
    let ckpt = load_checkpoint(
        ctx.input_path("paths.checkpoint", "model.ckpt"),
        Some(&tax.digest()),
    )?;
    let ds = super::read_dataset(&ctx.input_path("paths.test", "test.jsonl"))?;

    let x = super::design_matrix(&ds, &ctx.images_dir(), ckpt.model_cfg.d_x)?;
    let y = super::label_matrix(&ds, tax.category_count())?;
    let h = forward_h_batch(&ckpt.params, &x)?;
    let batch = PredictionBatch::new(h, y)?;

    let mut csv = String::from("metric,k_or_class,value\n");
    let mut excluded = 0;
    for k in [1usize, 3, 5] {
        if k > tax.category_count() {
            continue;
        }
        let r = mtopk(&batch, k)?;
        excluded = r.excluded_rows;
        csv.push_str(&format!("mtop,{k},{}\n", r.value));
    }
    csv.push_str(&format!("mtop_excluded_rows,,{excluded}\n"));
    let auc = macro_auc(&batch)?;
    csv.push_str(&format!("macro_auc,,{}\n", auc.value));
    csv.push_str(&format!("macro_auc_skipped_classes,,{}\n", auc.skipped_classes));
    fs::write(ctx.out_path("eval_metrics.csv"), csv)?;

    eprintln!("eval: {} test samples scored", ds.len());
    Ok(())
}
