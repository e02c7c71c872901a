//! Emoji embedding network.
//!
//! The embedder `f` is a feedforward chain of affine layers with ReLU
//! between them and raw logits at the end; `h = sigmoid(f(x))` turns the
//! embedding into per-category probabilities. A small affine head `t` can
//! be stacked on top for transfer targets, and the same embedding drives
//! zero-shot sentiment scoring.

mod augment;
mod checkpoint;
mod loss;
mod train;
mod transfer;
mod zsl;

pub use augment::{augment, hflip, CropConfig};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use loss::{bce_batch, bce_loss};
pub use train::{train_embedder, train_embedder_with, LossPoint, TrainConfig, TrainRun, TrainSample};
pub use transfer::{
    forward_g, predict_class, train_transfer, HeadActivation, HeadConfig, TransferHead,
    TransferMode, TransferSample,
};
pub use zsl::{zsl_predict, zsl_score, ZslMode};

use crate::error::{Error, Result};
use crate::numerics::{tag64, Pcg32, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Activation::Relu),
            other => Err(Error::Parse(format!("unknown activation code {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Flattened input dimensionality (image height * width * channels).
    pub d_x: usize,
    /// Embedding dimensionality; equals the taxonomy category count.
    pub d_e: usize,
    /// Hidden layer widths; empty means a single affine map.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub init_scale: f32,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(d_x: usize, d_e: usize, hidden: Vec<usize>, seed: u64) -> Self {
        ModelConfig {
            d_x,
            d_e,
            hidden,
            activation: Activation::Relu,
            init_scale: 1.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d_x == 0 || self.d_e == 0 || self.hidden.contains(&0) {
            return Err(Error::Shape("layer widths must be positive".into()));
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return Err(Error::Numeric(format!(
                "init_scale must be positive and finite, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }

    /// (input, output) width of each affine layer, from d_x through the
    /// hidden widths to d_e.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let widths: Vec<usize> = std::iter::once(self.d_x)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(self.d_e))
            .collect();
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// out x in weight matrix.
    pub w: Tensor,
    /// out-length bias.
    pub b: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedderParams {
    pub layers: Vec<LayerParams>,
}

impl EmbedderParams {
    /// Gaussian weights with stddev init_scale / sqrt(fan_in), zero biases.
    pub fn init(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut layers = Vec::new();
        for (l, (fan_in, fan_out)) in cfg.layer_dims().into_iter().enumerate() {
            let mut rng = Pcg32::derive(cfg.seed, &[tag64("init"), l as u64]);
            let std = cfg.init_scale / (fan_in as f32).sqrt();
            let data: Vec<f32> = (0..fan_in * fan_out).map(|_| (rng.normal() as f32) * std).collect();
            layers.push(LayerParams {
                w: Tensor::new(vec![fan_out, fan_in], data)?,
                b: Tensor::zeros(vec![fan_out]),
            });
        }
        Ok(EmbedderParams { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.w.cols())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.rows())
    }

    /// Flat parameter list (w0, b0, w1, b1, ...) for the optimizer.
    pub fn to_tensors(&self) -> Vec<Tensor> {
        self.layers
            .iter()
            .flat_map(|l| [l.w.clone(), l.b.clone()])
            .collect()
    }

    /// Rebuild from a flat list, checking that shapes chain correctly.
    pub fn from_tensors(tensors: Vec<Tensor>) -> Result<Self> {
        if tensors.is_empty() || tensors.len() % 2 != 0 {
            return Err(Error::Shape(format!(
                "expected weight/bias pairs, got {} tensors",
                tensors.len()
            )));
        }
        let mut layers = Vec::new();
        let mut prev_out: Option<usize> = None;
        let mut it = tensors.into_iter();
        while let (Some(w), Some(b)) = (it.next(), it.next()) {
            if w.rank() != 2 || b.rank() != 1 || b.len() != w.rows() {
                return Err(Error::Shape(format!(
                    "bad layer shapes {:?} / {:?}",
                    w.shape(),
                    b.shape()
                )));
            }
            if let Some(out) = prev_out {
                if w.cols() != out {
                    return Err(Error::Shape(format!(
                        "layer input {} does not chain from previous output {out}",
                        w.cols()
                    )));
                }
            }
            prev_out = Some(w.rows());
            layers.push(LayerParams { w, b });
        }
        Ok(EmbedderParams { layers })
    }
}

pub(crate) fn sigmoid(t: &Tensor) -> Tensor {
    t.map(|v| 1.0 / (1.0 + (-v).exp())).expect("sigmoid is total")
}

/// Per-layer inputs captured during a batch forward pass, enough to run
/// the backward pass.
pub(crate) struct BatchCache {
    /// inputs[l] is the batch entering layer l; inputs[0] is X.
    pub inputs: Vec<Tensor>,
    /// Raw output of the last layer, batch x d_e.
    pub logits: Tensor,
}

/// Forward an entire batch (rows are samples), keeping layer inputs.
pub(crate) fn forward_batch(params: &EmbedderParams, x: &Tensor) -> Result<BatchCache> {
    if x.rank() != 2 || x.cols() != params.input_dim() {
        return Err(Error::Shape(format!(
            "batch shape {:?} does not match input dim {}",
            x.shape(),
            params.input_dim()
        )));
    }
    let mut inputs = vec![x.clone()];
    let last = params.layers.len() - 1;
    let mut a = x.clone();
    for (l, layer) in params.layers.iter().enumerate() {
        let z = a.matmul_bt(&layer.w)?.add_row(&layer.b)?;
        if l == last {
            return Ok(BatchCache { inputs, logits: z });
        }
        a = z.map(|v| v.max(0.0))?;
        inputs.push(a.clone());
    }
    unreachable!("params always have at least one layer")
}

/// Gradients for every layer given d(loss)/d(logits); returned in the
/// same (w0, b0, w1, b1, ...) order as `EmbedderParams::to_tensors`.
pub(crate) fn backward_batch(
    params: &EmbedderParams,
    cache: &BatchCache,
    dlogits: &Tensor,
) -> Result<Vec<Tensor>> {
    let mut grads_rev: Vec<(Tensor, Tensor)> = Vec::new();
    let mut dz = dlogits.clone();
    for l in (0..params.layers.len()).rev() {
        let a = &cache.inputs[l];
        let dw = dz.matmul_at(a)?;
        let db = dz.col_sum()?;
        if l > 0 {
            let da = dz.matmul(&params.layers[l].w)?;
            // ReLU mask: the stored input of layer l is the activation
            // output of layer l-1.
            let mask = a.map(|v| if v > 0.0 { 1.0 } else { 0.0 })?;
            dz = da.hadamard(&mask)?;
        }
        grads_rev.push((dw, db));
    }
    let mut grads = Vec::new();
    for (dw, db) in grads_rev.into_iter().rev() {
        grads.push(dw);
        grads.push(db);
    }
    Ok(grads)
}

/// Embed a single input: raw d_e logits.
pub fn forward_f(params: &EmbedderParams, x: &Tensor) -> Result<Tensor> {
    if x.rank() != 1 {
        return Err(Error::Shape(format!(
            "expected a vector input, got shape {:?}",
            x.shape()
        )));
    }
    let batch = Tensor::new(vec![1, x.len()], x.data().to_vec())?;
    let cache = forward_batch(params, &batch)?;
    Tensor::vector(cache.logits.data().to_vec())
}

/// Per-category probabilities sigmoid(f(x)).
pub fn forward_h(params: &EmbedderParams, x: &Tensor) -> Result<Tensor> {
    Ok(sigmoid(&forward_f(params, x)?))
}

/// Raw logits for a whole batch; rows of `x` are flattened inputs.
pub fn forward_f_batch(params: &EmbedderParams, x: &Tensor) -> Result<Tensor> {
    Ok(forward_batch(params, x)?.logits)
}

/// Batch loss plus parameter gradients in `to_tensors` order — one
/// training step minus the optimizer. Public so gradient checks and
/// bespoke training loops share the exact training arithmetic.
pub fn loss_and_gradients(
    params: &EmbedderParams,
    x: &Tensor,
    y: &Tensor,
    prob_clamp: f32,
) -> Result<(f64, Vec<Tensor>)> {
    let cache = forward_batch(params, x)?;
    let h = sigmoid(&cache.logits);
    let (loss, dlogits) = loss::bce_batch(&h, y, prob_clamp)?;
    let grads = backward_batch(params, &cache, &dlogits)?;
    Ok((loss, grads))
}

/// Per-category probabilities for a whole batch.
pub fn forward_h_batch(params: &EmbedderParams, x: &Tensor) -> Result<Tensor> {
    Ok(sigmoid(&forward_f_batch(params, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_params(dims: &[(usize, usize)]) -> EmbedderParams {
        EmbedderParams {
            layers: dims
                .iter()
                .map(|&(i, o)| LayerParams {
                    w: Tensor::zeros(vec![o, i]),
                    b: Tensor::zeros(vec![o]),
                })
                .collect(),
        }
    }

    #[test]
    fn zero_params_embed_to_zero_and_half() {
        let params = zero_params(&[(4, 3), (3, 2)]);
        let x = Tensor::vector(vec![1.0, -2.0, 3.0, 4.0]).unwrap();
        let e = forward_f(&params, &x).unwrap();
        assert_eq!(e.data(), &[0.0, 0.0]);
        let h = forward_h(&params, &x).unwrap();
        assert_eq!(h.data(), &[0.5, 0.5]);
    }

    #[test]
    fn linear_model_basis_probe_reads_weight_columns() {
        // With no hidden layers, f(e_i) = W[:, i] + b.
        let w = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Tensor::vector(vec![0.5, -0.5]).unwrap();
        let params = EmbedderParams {
            layers: vec![LayerParams { w, b }],
        };
        let e1 = Tensor::vector(vec![0.0, 1.0, 0.0]).unwrap();
        let got = forward_f(&params, &e1).unwrap();
        assert_eq!(got.data(), &[2.5, 4.5]);
    }

    #[test]
    fn forward_matches_straight_line_oracle() {
        // Independent scalar-loop recomputation in f64.
        let cfg = ModelConfig::new(6, 4, vec![5, 3], 99);
        let params = EmbedderParams::init(&cfg).unwrap();
        let mut rng = Pcg32::derive(7, &[tag64("probe")]);
        for _ in 0..20 {
            let x: Vec<f32> = (0..6).map(|_| rng.normal() as f32).collect();
            let got = forward_f(&params, &Tensor::vector(x.clone()).unwrap()).unwrap();

            let mut a: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            for (l, layer) in params.layers.iter().enumerate() {
                let mut z = vec![0.0f64; layer.w.rows()];
                for (r, zr) in z.iter_mut().enumerate() {
                    let mut acc = layer.b.data()[r] as f64;
                    for (c, &av) in a.iter().enumerate() {
                        acc += layer.w.at2(r, c) as f64 * av;
                    }
                    *zr = acc;
                }
                a = if l + 1 == params.layers.len() {
                    z
                } else {
                    z.into_iter().map(|v| v.max(0.0)).collect()
                };
            }
            for (g, o) in got.data().iter().zip(&a) {
                assert!((*g as f64 - o).abs() < 1e-5, "{g} vs {o}");
            }
        }
    }

    #[test]
    fn batch_forward_agrees_with_per_row_forward() {
        let cfg = ModelConfig::new(5, 3, vec![4], 17);
        let params = EmbedderParams::init(&cfg).unwrap();
        let mut rng = Pcg32::derive(11, &[tag64("batch-probe")]);
        let rows = 6;
        let data: Vec<f32> = (0..rows * 5).map(|_| rng.normal() as f32).collect();
        let x = Tensor::matrix(rows, 5, data.clone()).unwrap();
        let batch = forward_h_batch(&params, &x).unwrap();
        assert_eq!(batch.shape(), &[rows, 3]);
        for r in 0..rows {
            let row = Tensor::vector(data[r * 5..(r + 1) * 5].to_vec()).unwrap();
            let single = forward_h(&params, &row).unwrap();
            for c in 0..3 {
                assert_eq!(batch.at2(r, c), single.data()[c]);
            }
        }
    }

    #[test]
    fn saturated_logits_stay_finite() {
        let w = Tensor::matrix(2, 1, vec![1e4, -1e4]).unwrap();
        let b = Tensor::zeros(vec![2]);
        let params = EmbedderParams {
            layers: vec![LayerParams { w, b }],
        };
        let h = forward_h(&params, &Tensor::vector(vec![1.0]).unwrap()).unwrap();
        assert!((h.data()[0] - 1.0).abs() < 1e-6);
        assert!(h.data()[1].abs() < 1e-6);
        assert!(h.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sigmoid_is_monotone_per_coordinate() {
        let lo = sigmoid(&Tensor::vector(vec![-2.0, 0.0, 1.0]).unwrap());
        let hi = sigmoid(&Tensor::vector(vec![-1.0, 0.5, 3.0]).unwrap());
        for (l, h) in lo.data().iter().zip(hi.data()) {
            assert!(l < h);
        }
    }

    #[test]
    fn init_is_seeded_and_scaled() {
        let cfg = ModelConfig::new(100, 8, vec![50], 5);
        let a = EmbedderParams::init(&cfg).unwrap();
        let b = EmbedderParams::init(&cfg).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.seed = 6;
        assert_ne!(a, EmbedderParams::init(&other).unwrap());

        // Empirical stddev of the first layer tracks init_scale / sqrt(100).
        let w = &a.layers[0].w;
        let var: f64 = w.data().iter().map(|&v| (v as f64).powi(2)).sum::<f64>()
            / w.len() as f64;
        let want = (cfg.init_scale as f64 / 10.0).powi(2);
        assert!((var - want).abs() < want * 0.2, "var {var} vs {want}");
        assert!(a.layers.iter().all(|l| l.b.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let cfg = ModelConfig::new(4, 2, vec![], 0);
        let params = EmbedderParams::init(&cfg).unwrap();
        let bad = Tensor::vector(vec![1.0; 5]).unwrap();
        assert!(matches!(forward_f(&params, &bad), Err(Error::Shape(_))));
    }

    #[test]
    fn tensor_roundtrip_rebuilds_params() {
        let cfg = ModelConfig::new(5, 3, vec![4], 1);
        let params = EmbedderParams::init(&cfg).unwrap();
        let rebuilt = EmbedderParams::from_tensors(params.to_tensors()).unwrap();
        assert_eq!(params, rebuilt);
        assert_eq!(rebuilt.input_dim(), 5);
        assert_eq!(rebuilt.output_dim(), 3);
    }

    #[test]
    fn from_tensors_rejects_broken_chains() {
        let w0 = Tensor::zeros(vec![4, 5]);
        let b0 = Tensor::zeros(vec![4]);
        let w1 = Tensor::zeros(vec![3, 7]); // expects 4 inputs
        let b1 = Tensor::zeros(vec![3]);
        assert!(matches!(
            EmbedderParams::from_tensors(vec![w0, b0, w1, b1]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(EmbedderParams::init(&ModelConfig::new(0, 2, vec![], 0)).is_err());
        assert!(EmbedderParams::init(&ModelConfig::new(4, 2, vec![0], 0)).is_err());
        let mut cfg = ModelConfig::new(4, 2, vec![], 0);
        cfg.init_scale = -1.0;
        assert!(EmbedderParams::init(&cfg).is_err());
    }
}
