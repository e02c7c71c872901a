//! `train`: fit the embedding network on the train split.
//!
//! Writes `model.ckpt` and `loss_history.csv`. The checkpoint is saved at
//! every logged step, so when training aborts on a non-finite loss (exit
//! code 5) the last logged parameters are still on disk.

use std::fs;

use smileybench_core::emoji::EmojiTaxonomy;
use smileybench_core::model::{
    save_checkpoint, train_embedder_with, Checkpoint, CropConfig, EmbedderParams, ModelConfig,
    TrainConfig, TrainSample,
};
use smileybench_core::{ppm, Error, Result};

use crate::config::{Config, Ctx};

fn crop_config(cfg: &Config) -> Result<Option<CropConfig>> {
    let h = cfg.get_usize("train.crop_height")?;
    let w = cfg.get_usize("train.crop_width")?;
    match (h, w) {
        (None, None) => Ok(None),
        (Some(h), Some(w)) => {
            let mut crop = CropConfig::new(h, w);
            if let Some(v) = cfg.get_f32("train.scale_min")? {
                crop.scale_min = v;
            }
            if let Some(v) = cfg.get_f32("train.scale_max")? {
                crop.scale_max = v;
            }
            Ok(Some(crop))
        }
        _ => Err(Error::Parse(
            "config: train.crop_height and train.crop_width must be set together".into(),
        )),
    }
}

pub(crate) fn model_config(ctx: &Ctx, tax: &EmojiTaxonomy, d_x: usize) -> Result<ModelConfig> {
    let hidden = ctx.cfg.get_usize_list("model.hidden")?.unwrap_or_default();
    let mut cfg = ModelConfig::new(d_x, tax.category_count(), hidden, ctx.stage_seed("model"));
    if let Some(s) = ctx.cfg.get_f32("model.init_scale")? {
        cfg.init_scale = s;
    }
    Ok(cfg)
}

pub fn run(ctx: &Ctx) -> Result<()> {
    let tax = ctx.taxonomy()?;
    let ds = super::read_dataset(&ctx.input_path("paths.train", "train.jsonl"))?;
    if ds.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let images_dir = ctx.images_dir();
    let data: Vec<TrainSample> = ds
        .iter()
        .map(|s| {
            Ok(TrainSample {
                input: ppm::load_ppm(images_dir.join(&s.image_ref))?,
                labels: s.label_set.clone(),
            })
        })
        .collect::<Result<_>>()?;

    let crop = crop_config(&ctx.cfg)?;
    let d_x = match ctx.cfg.get_usize("model.input_dim")? {
        Some(d) => d,
        None => match &crop {
            Some(c) => c.out_h * c.out_w * 3,
            None => data[0].input.len(),
        },
    };
    let model_cfg = model_config(ctx, &tax, d_x)?;

    let mut cfg = TrainConfig::new(
        ctx.cfg.get_u64("train.iterations")?.unwrap_or(1000),
        ctx.stage_seed("train"),
    );
    if let Some(v) = ctx.cfg.get_f32("train.learning_rate")? {
        cfg.learning_rate = v;
    }
    if let Some(v) = ctx.cfg.get_usize("train.batch_size")? {
        cfg.batch_size = v;
    }
    if let Some(v) = ctx.cfg.get_u64("train.log_every")? {
        cfg.log_every = v;
    }
    if let Some(v) = ctx.cfg.get_f32("train.prob_clamp")? {
        cfg.prob_clamp = v;
    }
    cfg.hflip = ctx.cfg.get_bool("train.hflip")?.unwrap_or(false);
    cfg.crop = crop;

    let ckpt_path = ctx.out_path("model.ckpt");
    let digest = tax.digest();
    let save = |params: &EmbedderParams| -> Result<()> {
        save_checkpoint(
            &ckpt_path,
            &Checkpoint {
                model_cfg: model_cfg.clone(),
                taxonomy_digest: digest,
                params: params.clone(),
                head: None,
            },
        )
    };

    let run = train_embedder_with(&data, &model_cfg, &cfg, |params, _step| save(params))?;
    save(&run.params)?;

    let mut csv = String::from("iteration,loss\n");
    for p in &run.history {
        csv.push_str(&format!("{},{}\n", p.iteration, p.loss));
    }
    fs::write(ctx.out_path("loss_history.csv"), csv)?;

    match run.history.last() {
        Some(p) => eprintln!("train: {} iterations, final loss {}", cfg.iterations, p.loss),
        None => eprintln!("train: {} iterations", cfg.iterations),
    }
    Ok(())
}
