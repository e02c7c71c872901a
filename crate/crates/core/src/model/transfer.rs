//! Transfer learning: a small affine head on top of the embedding.
//!
//! The composed classifier is g = t(f(x)) where t maps the raw d_e
//! embedding logits to the target label space. The head trains with
//! softmax cross entropy (multi-class) or sigmoid BCE (single binary
//! output); the embedder is either frozen or finetuned along with it.

use crate::error::{Error, Result};
use crate::numerics::{tag64, AdamConfig, AdamState, Pcg32, Tensor};

use super::train::{LossPoint, TrainConfig};
use super::{backward_batch, forward_batch, EmbedderParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadActivation {
    /// Multi-class probabilities; requires at least two classes.
    Softmax,
    /// One binary output trained against {0, 1} targets.
    Sigmoid,
}

impl HeadActivation {
    pub fn code(self) -> u8 {
        match self {
            HeadActivation::Softmax => 0,
            HeadActivation::Sigmoid => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(HeadActivation::Softmax),
            1 => Ok(HeadActivation::Sigmoid),
            other => Err(Error::Parse(format!("unknown head activation code {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferHead {
    /// classes x d_e weight matrix.
    pub w: Tensor,
    /// classes-length bias.
    pub b: Tensor,
    pub activation: HeadActivation,
}

impl TransferHead {
    pub fn classes(&self) -> usize {
        self.w.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.w.cols()
    }
}

#[derive(Debug, Clone)]
pub struct HeadConfig {
    pub classes: usize,
    pub activation: HeadActivation,
    pub init_scale: f32,
    pub seed: u64,
}

impl HeadConfig {
    pub fn new(classes: usize, activation: HeadActivation, seed: u64) -> Self {
        HeadConfig {
            classes,
            activation,
            init_scale: 1.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        match self.activation {
            HeadActivation::Softmax if self.classes < 2 => Err(Error::Shape(
                "softmax head needs at least two classes".into(),
            )),
            HeadActivation::Sigmoid if self.classes != 1 => Err(Error::Shape(
                "sigmoid head has exactly one output".into(),
            )),
            _ => Ok(()),
        }
    }

    fn init(&self, d_e: usize) -> Result<TransferHead> {
        self.validate()?;
        let mut rng = Pcg32::derive(self.seed, &[tag64("head-init")]);
        let std = self.init_scale / (d_e as f32).sqrt();
        let data: Vec<f32> = (0..self.classes * d_e).map(|_| (rng.normal() as f32) * std).collect();
        Ok(TransferHead {
            w: Tensor::new(vec![self.classes, d_e], data)?,
            b: Tensor::zeros(vec![self.classes]),
            activation: self.activation,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferMode {
    /// Update only the head; the embedder stays bit-identical.
    Frozen,
    /// Update the head and the embedder together.
    Finetune,
}

/// A target-task example: input as in embedder training, plus a class
/// index (for a sigmoid head the index is the binary label 0 or 1).
#[derive(Debug, Clone)]
pub struct TransferSample {
    pub input: Tensor,
    pub class: usize,
}

/// Row-wise stable softmax computed in f64.
fn softmax_rows(z: &Tensor) -> Tensor {
    let (rows, cols) = (z.rows(), z.cols());
    let mut out = vec![0.0f32; rows * cols];
    for r in 0..rows {
        let row = z.row(r);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v as f64));
        let exps: Vec<f64> = row.iter().map(|&v| ((v as f64) - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for (c, e) in exps.iter().enumerate() {
            out[r * cols + c] = (e / total) as f32;
        }
    }
    Tensor::new(vec![rows, cols], out).expect("softmax output is finite")
}

/// Head probabilities and the loss gradient with respect to head logits.
fn head_loss(
    z: &Tensor,
    classes: &[usize],
    activation: HeadActivation,
    eps: f32,
) -> Result<(f64, Tensor)> {
    let b = z.rows();
    let k = z.cols();
    let mut grad = vec![0.0f32; b * k];
    let mut loss = 0.0f64;
    match activation {
        HeadActivation::Softmax => {
            let p = softmax_rows(z);
            for (r, &class) in classes.iter().enumerate() {
                let pc = (p.at2(r, class) as f64).clamp(eps as f64, 1.0);
                loss -= pc.ln();
                for c in 0..k {
                    let y = if c == class { 1.0 } else { 0.0 };
                    grad[r * k + c] = (p.at2(r, c) - y) / b as f32;
                }
            }
        }
        HeadActivation::Sigmoid => {
            for (r, &class) in classes.iter().enumerate() {
                let logit = z.at2(r, 0) as f64;
                let p = 1.0 / (1.0 + (-logit).exp());
                let pc = p.clamp(eps as f64, 1.0 - eps as f64);
                let y = class as f64;
                loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
                grad[r * k] = ((p - y) / b as f64) as f32;
            }
        }
    }
    Ok((loss / b as f64, Tensor::new(vec![b, k], grad)?))
}

/// Train the transfer head (and optionally the embedder).
pub fn train_transfer(
    params: &EmbedderParams,
    data: &[TransferSample],
    head_cfg: &HeadConfig,
    mode: TransferMode,
    cfg: &TrainConfig,
) -> Result<(TransferHead, EmbedderParams, Vec<LossPoint>)> {
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if cfg.batch_size == 0 {
        return Err(Error::Shape("batch size must be at least 1".into()));
    }
    let label_bound = match head_cfg.activation {
        HeadActivation::Softmax => head_cfg.classes,
        HeadActivation::Sigmoid => 2,
    };
    for s in data {
        if s.class >= label_bound {
            return Err(Error::Label(format!(
                "target class {} outside 0..{label_bound}",
                s.class
            )));
        }
    }

    let d_e = params.output_dim();
    let d_x = params.input_dim();
    let mut head = head_cfg.init(d_e)?;
    let mut f_params = params.clone();
    let mut history = Vec::new();
    if cfg.iterations == 0 {
        return Ok((head, f_params, history));
    }

    let adam_cfg = AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    };
    let mut adam = match mode {
        TransferMode::Frozen => AdamState::new(&[head.w.clone(), head.b.clone()]),
        TransferMode::Finetune => {
            let mut all = f_params.to_tensors();
            all.extend([head.w.clone(), head.b.clone()]);
            AdamState::new(&all)
        }
    };
    let mut aug_rng = Pcg32::derive(cfg.seed, &[tag64("augment")]);

    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut pos = n;
    let mut epoch = 0u64;

    for step in 1..=cfg.iterations {
        if pos >= n {
            let mut rng = Pcg32::derive(cfg.seed, &[tag64("epoch"), epoch]);
            rng.shuffle(&mut order);
            pos = 0;
            epoch += 1;
        }
        let batch = &order[pos..(pos + cfg.batch_size).min(n)];
        pos += batch.len();

        let b = batch.len();
        let mut x = Vec::with_capacity(b * d_x);
        let mut classes = Vec::with_capacity(b);
        for &si in batch {
            let sample = &data[si];
            let flattened;
            let input = if sample.input.rank() == 3 && (cfg.hflip || cfg.crop.is_some()) {
                flattened =
                    super::augment(&sample.input, cfg.hflip, cfg.crop.as_ref(), &mut aug_rng)?;
                &flattened
            } else {
                &sample.input
            };
            if input.len() != d_x {
                return Err(Error::Shape(format!(
                    "sample flattens to {} values, embedder expects {d_x}",
                    input.len()
                )));
            }
            x.extend_from_slice(input.data());
            classes.push(sample.class);
        }
        let x = Tensor::new(vec![b, d_x], x)?;

        let cache = forward_batch(&f_params, &x)?;
        let z = cache.logits.matmul_bt(&head.w)?.add_row(&head.b)?;
        let (loss, dz) = head_loss(&z, &classes, head.activation, cfg.prob_clamp)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite loss at iteration {step}"
            )));
        }

        let dw_head = dz.matmul_at(&cache.logits)?;
        let db_head = dz.col_sum()?;
        match mode {
            TransferMode::Frozen => {
                let updated = adam.step(
                    &[head.w.clone(), head.b.clone()],
                    &[dw_head, db_head],
                    &adam_cfg,
                )?;
                let mut it = updated.into_iter();
                head.w = it.next().unwrap();
                head.b = it.next().unwrap();
            }
            TransferMode::Finetune => {
                let de = dz.matmul(&head.w)?;
                let mut grads = backward_batch(&f_params, &cache, &de)?;
                grads.extend([dw_head, db_head]);
                let mut all = f_params.to_tensors();
                all.extend([head.w.clone(), head.b.clone()]);
                let mut updated = adam.step(&all, &grads, &adam_cfg)?;
                head.b = updated.pop().unwrap();
                head.w = updated.pop().unwrap();
                f_params = EmbedderParams::from_tensors(updated)?;
            }
        }

        if (cfg.log_every > 0 && step % cfg.log_every == 0) || step == cfg.iterations {
            history.push(LossPoint { iteration: step, loss });
        }
    }
    Ok((head, f_params, history))
}

/// Target-space probabilities g(x) = t(f(x)).
pub fn forward_g(params: &EmbedderParams, head: &TransferHead, x: &Tensor) -> Result<Tensor> {
    if head.embed_dim() != params.output_dim() {
        return Err(Error::Shape(format!(
            "head expects {} embedding dims, embedder yields {}",
            head.embed_dim(),
            params.output_dim()
        )));
    }
    let e = super::forward_f(params, x)?;
    let e2 = Tensor::new(vec![1, e.len()], e.data().to_vec())?;
    let z = e2.matmul_bt(&head.w)?.add_row(&head.b)?;
    let p = match head.activation {
        HeadActivation::Softmax => softmax_rows(&z),
        HeadActivation::Sigmoid => super::sigmoid(&z),
    };
    Tensor::vector(p.data().to_vec())
}

/// Hard class decision: argmax under softmax, 0.5 threshold under sigmoid.
pub fn predict_class(params: &EmbedderParams, head: &TransferHead, x: &Tensor) -> Result<usize> {
    let p = forward_g(params, head, x)?;
    Ok(match head.activation {
        HeadActivation::Softmax => {
            p.data()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .unwrap()
                .0
        }
        HeadActivation::Sigmoid => usize::from(p.data()[0] >= 0.5),
    })
}
