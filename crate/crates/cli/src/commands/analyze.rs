//! `analyze`: what the embedding learned.
//!
//! Correlates each category probability with emotion labels from an
//! `analyze.labels` TSV (class i names `analyze.emotions[i]`), writing a
//! C x E `fingerprint.csv`, plus a 2-d principal-component projection of
//! the probabilities as `projection.csv` and `projection.svg`.

use std::fs;
use std::path::Path;

use smileybench_core::analysis::{fingerprint, project_2d, ProjectionResult};
use smileybench_core::corpus::Sample;
use smileybench_core::model::{forward_h_batch, load_checkpoint};
use smileybench_core::{Error, Result};

use crate::config::Ctx;

pub fn run(ctx: &Ctx) -> Result<()> {
    let tax = ctx.taxonomy()?;
    let ckpt = load_checkpoint(
        ctx.input_path("paths.checkpoint", "model.ckpt"),
        Some(&tax.digest()),
    )?;
    let ds = super::read_dataset(&ctx.input_path("paths.dataset", "dataset.jsonl"))?;
    let label_map = super::read_label_map(&ctx.cfg.require_path("analyze.labels")?)?;
    let emotions: Vec<String> = ctx
        .cfg
        .require("analyze.emotions")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if emotions.iter().any(String::is_empty) {
        return Err(Error::Parse(
            "config: analyze.emotions must be a comma-separated list of names".into(),
        ));
    }

    let mut kept: Vec<Sample> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for s in &ds {
        let Some(&class) = label_map.get(&s.sample_id) else {
            continue;
        };
        if class >= emotions.len() {
            return Err(Error::Label(format!(
                "sample {}: emotion label {class} out of range for {} emotions",
                s.sample_id,
                emotions.len()
            )));
        }
        kept.push(s.clone());
        labels.push(class);
    }
    if kept.is_empty() {
        return Err(Error::EmptyBatch);
    }

    let x = super::design_matrix(&kept, &ctx.images_dir(), ckpt.model_cfg.d_x)?;
    let probs = forward_h_batch(&ckpt.params, &x)?;

    let fp = fingerprint(&probs, &labels, &emotions)?;
    let mut csv = String::from("category");
    for name in &emotions {
        csv.push(',');
        csv.push_str(&super::csv_field(name));
    }
    csv.push('\n');
    for c in 0..tax.category_count() {
        csv.push_str(&super::csv_field(&tax.category(c).name));
        for e in 0..emotions.len() {
            match fp.at(c, e) {
                Some(v) => csv.push_str(&format!(",{v}")),
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    fs::write(ctx.out_path("fingerprint.csv"), csv)?;

    let proj = project_2d(&probs, &labels)?;
    let mut csv = String::from("sid,x,y,label\n");
    for (i, s) in kept.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            super::csv_field(&s.sample_id),
            proj.coords[i][0],
            proj.coords[i][1],
            labels[i]
        ));
    }
    fs::write(ctx.out_path("projection.csv"), csv)?;
    write_svg(&ctx.out_path("projection.svg"), &proj)?;

    eprintln!(
        "analyze: {} labeled samples, {} emotions",
        kept.len(),
        emotions.len()
    );
    Ok(())
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
];

fn write_svg(path: &Path, proj: &ProjectionResult) -> Result<()> {
    const SIZE: f64 = 800.0;
    const MARGIN: f64 = 40.0;

    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for p in &proj.coords {
        for axis in 0..2 {
            min[axis] = min[axis].min(p[axis]);
            max[axis] = max[axis].max(p[axis]);
        }
    }
    let place = |v: f64, axis: usize| -> f64 {
        let span = max[axis] - min[axis];
        if span <= 0.0 {
            return SIZE / 2.0;
        }
        MARGIN + (v - min[axis]) / span * (SIZE - 2.0 * MARGIN)
    };

    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 800\">\n\
         <rect width=\"800\" height=\"800\" fill=\"white\"/>\n",
    );
    for (p, &label) in proj.coords.iter().zip(&proj.labels) {
        // SVG y grows downward; flip so the second component points up.
        let cx = place(p[0], 0);
        let cy = SIZE - place(p[1], 1);
        svg.push_str(&format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"3\" fill=\"{}\"/>\n",
            PALETTE[label % PALETTE.len()]
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}
