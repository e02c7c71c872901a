//! `stats`: dataset composition reports.
//!
//! `label_stats.csv` has one `category_id,name,count` row per taxonomy
//! category; `cooccurrence.csv` is the full C x C conditional
//! co-occurrence matrix with category names as header row and column.

use std::fs;

use smileybench_core::sampler::{cooccurrence_matrix, label_distribution};
use smileybench_core::Result;

use crate::config::Ctx;

pub fn run(ctx: &Ctx) -> Result<()> {
    let tax = ctx.taxonomy()?;
    let ds = super::read_dataset(&ctx.input_path("paths.dataset", "dataset.jsonl"))?;
    let c = tax.category_count();

    let stats = label_distribution(&ds, c)?;
    let mut csv = String::from("category_id,name,count\n");
    for cat in tax.categories() {
        csv.push_str(&format!(
            "{},{},{}\n",
            cat.id,
            super::csv_field(&cat.name),
            stats.counts[cat.id]
        ));
    }
    fs::write(ctx.out_path("label_stats.csv"), csv)?;

    let co = cooccurrence_matrix(&ds, c)?;
    let mut csv = String::from("category");
    for cat in tax.categories() {
        csv.push(',');
        csv.push_str(&super::csv_field(&cat.name));
    }
    csv.push('\n');
    for i in 0..c {
        csv.push_str(&super::csv_field(&tax.category(i).name));
        for j in 0..c {
            csv.push_str(&format!(",{}", co[i * c + j]));
        }
        csv.push('\n');
    }
    fs::write(ctx.out_path("cooccurrence.csv"), csv)?;

    eprintln!(
        "stats: {} samples, {} label assignments",
        stats.total_samples, stats.total_labels
    );
    Ok(())
}
