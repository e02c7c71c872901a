//! `sample`: temporally balanced reservoir sampling of the accepted
//! samples. Writes `dataset.jsonl` with window ids filled in.

use smileybench_core::sampler::{balanced_sample, SamplerConfig};
use smileybench_core::Result;

use crate::config::Ctx;

pub fn run(ctx: &Ctx) -> Result<()> {
    let tax = ctx.taxonomy()?;
    let input = ctx.input_path("paths.accepted", "accepted.jsonl");
    let samples = super::read_dataset(&input)?;

    let default_start = chrono::NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
    let default_end = chrono::NaiveDate::from_ymd_opt(2018, 7, 31).unwrap();
    let mut cfg = SamplerConfig::new(
        ctx.cfg.get_date("sampler.range_start")?.unwrap_or(default_start),
        ctx.cfg.get_date("sampler.range_end")?.unwrap_or(default_end),
        ctx.stage_seed("sample"),
    );
    if let Some(days) = ctx.cfg.get_u32("sampler.window_days")? {
        cfg.window_days = days;
    }
    if let Some(cap) = ctx.cfg.get_usize("sampler.per_category_cap")? {
        cfg.per_category_cap = cap;
    }

    let ds = balanced_sample(&samples, tax.category_count(), &cfg)?;
    super::write_dataset(&ctx.out_path("dataset.jsonl"), &ds.samples)?;

    eprintln!(
        "sample: kept {} of {} samples across {} windows",
        ds.samples.len(),
        samples.len(),
        ds.windows.len()
    );
    Ok(())
}
