//! Training-time image augmentation.
//!
//! Pipeline order: optional horizontal flip (p = 0.5), uniform scale draw,
//! nearest-neighbor resize, uniformly placed crop. All steps are driven by
//! the caller's RNG so a training run replays exactly.

use crate::error::{Error, Result};
use crate::numerics::{Pcg32, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct CropConfig {
    pub out_h: usize,
    pub out_w: usize,
    /// Uniform scale range applied before the crop; [1.0, 1.25] unless
    /// configured otherwise.
    pub scale_min: f32,
    pub scale_max: f32,
}

impl CropConfig {
    pub fn new(out_h: usize, out_w: usize) -> Self {
        CropConfig {
            out_h,
            out_w,
            scale_min: 1.0,
            scale_max: 1.25,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.out_h == 0 || self.out_w == 0 {
            return Err(Error::Augment("crop dimensions must be positive".into()));
        }
        if !(self.scale_min.is_finite()
            && self.scale_max.is_finite()
            && self.scale_min > 0.0
            && self.scale_min <= self.scale_max)
        {
            return Err(Error::Augment(format!(
                "bad scale range [{}, {}]",
                self.scale_min, self.scale_max
            )));
        }
        Ok(())
    }
}

fn dims(image: &Tensor) -> Result<(usize, usize, usize)> {
    if image.rank() != 3 {
        return Err(Error::Shape(format!(
            "expected [h, w, c] image, got shape {:?}",
            image.shape()
        )));
    }
    Ok((image.shape()[0], image.shape()[1], image.shape()[2]))
}

/// Mirror the image left-right.
pub fn hflip(image: &Tensor) -> Result<Tensor> {
    let (h, w, c) = dims(image)?;
    let src = image.data();
    let mut out = vec![0.0f32; src.len()];
    for y in 0..h {
        for x in 0..w {
            let from = (y * w + x) * c;
            let to = (y * w + (w - 1 - x)) * c;
            out[to..to + c].copy_from_slice(&src[from..from + c]);
        }
    }
    Tensor::new(vec![h, w, c], out)
}

/// Nearest-neighbor resize; source index is floor(dst / scale), so a scale
/// of exactly 1 reproduces the input.
fn resize_nearest(image: &Tensor, new_h: usize, new_w: usize, scale: f32) -> Result<Tensor> {
    let (h, w, c) = dims(image)?;
    if scale == 1.0 && new_h == h && new_w == w {
        return Ok(image.clone());
    }
    let src = image.data();
    let mut out = vec![0.0f32; new_h * new_w * c];
    for y in 0..new_h {
        let sy = ((y as f32 / scale) as usize).min(h - 1);
        for x in 0..new_w {
            let sx = ((x as f32 / scale) as usize).min(w - 1);
            let from = (sy * w + sx) * c;
            let to = (y * new_w + x) * c;
            out[to..to + c].copy_from_slice(&src[from..from + c]);
        }
    }
    Tensor::new(vec![new_h, new_w, c], out)
}

fn crop(image: &Tensor, top: usize, left: usize, out_h: usize, out_w: usize) -> Result<Tensor> {
    let (h, w, c) = dims(image)?;
    if top + out_h > h || left + out_w > w {
        return Err(Error::Augment(format!(
            "crop {out_h}x{out_w} at ({top}, {left}) exceeds {h}x{w}"
        )));
    }
    let src = image.data();
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for y in 0..out_h {
        let from = ((top + y) * w + left) * c;
        out.extend_from_slice(&src[from..from + out_w * c]);
    }
    Tensor::new(vec![out_h, out_w, c], out)
}

/// Randomized flip/scale/crop. The RNG draw order is fixed: flip coin
/// (when enabled), then scale, then crop row, then crop column.
pub fn augment(
    image: &Tensor,
    flip: bool,
    crop_cfg: Option<&CropConfig>,
    rng: &mut Pcg32,
) -> Result<Tensor> {
    let (h, w, _) = dims(image)?;
    let mut img = if flip && rng.chance(0.5) {
        hflip(image)?
    } else {
        image.clone()
    };
    if let Some(cfg) = crop_cfg {
        cfg.validate()?;
        let scale = rng.uniform_in(cfg.scale_min, cfg.scale_max);
        let new_h = (h as f32 * scale) as usize;
        let new_w = (w as f32 * scale) as usize;
        if new_h < cfg.out_h || new_w < cfg.out_w {
            return Err(Error::Augment(format!(
                "scaled image {new_h}x{new_w} smaller than crop {}x{}",
                cfg.out_h, cfg.out_w
            )));
        }
        img = resize_nearest(&img, new_h, new_w, scale)?;
        let top = rng.below(new_h - cfg.out_h + 1);
        let left = rng.below(new_w - cfg.out_w + 1);
        img = crop(&img, top, left, cfg.out_h, cfg.out_w)?;
    }
    Ok(img)
}
