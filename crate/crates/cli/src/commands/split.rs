//! `split`: carve the dataset into `train.jsonl`, `val.jsonl` and
//! `test.jsonl` with per-category val/test targets.

use smileybench_core::sampler::split_dataset;
use smileybench_core::Result;

use crate::config::Ctx;

pub fn run(ctx: &Ctx) -> Result<()> {
    let tax = ctx.taxonomy()?;
    let ds = super::read_dataset(&ctx.input_path("paths.dataset", "dataset.jsonl"))?;
    let val = ctx.cfg.get_usize("split.val_per_class")?.unwrap_or(500);
    let test = ctx.cfg.get_usize("split.test_per_class")?.unwrap_or(1000);

    let res = split_dataset(&ds, tax.category_count(), val, test, ctx.stage_seed("split"))?;

    super::write_dataset(&ctx.out_path("train.jsonl"), &res.train)?;
    super::write_dataset(&ctx.out_path("val.jsonl"), &res.val)?;
    super::write_dataset(&ctx.out_path("test.jsonl"), &res.test)?;

    if !res.empty_categories.is_empty() {
        eprintln!(
            "split: warning: {} categories have no samples",
            res.empty_categories.len()
        );
    }
    eprintln!(
        "split: {} train / {} val / {} test",
        res.train.len(),
        res.val.len(),
        res.test.len()
    );
    Ok(())
}
