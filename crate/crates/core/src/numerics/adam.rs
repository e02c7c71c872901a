//! Adam optimizer over lists of parameter tensors.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Debug, Clone)]
pub struct AdamConfig {
    pub learning_rate: f32,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates, one slot per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &[Tensor]) -> Self {
        AdamState {
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update. Returns the new parameter tensors; the
    /// moment estimates advance in place.
    pub fn step(
        &mut self,
        params: &[Tensor],
        grads: &[Tensor],
        cfg: &AdamConfig,
    ) -> Result<Vec<Tensor>> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(Error::Shape(format!(
                "adam slot mismatch: {} params, {} grads, {} states",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        let lr = cfg.learning_rate as f64;
        let mut out = Vec::with_capacity(params.len());
        for (slot, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(Error::Shape(format!(
                    "adam slot {slot}: param shape {:?} vs grad shape {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            let mut next = Vec::with_capacity(p.len());
            for i in 0..p.len() {
                let gi = g.data()[i] as f64;
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                next.push((p.data()[i] as f64 - lr * m_hat / (v_hat.sqrt() + cfg.epsilon)) as f32);
            }
            out.push(Tensor::new(p.shape().to_vec(), next)?);
        }
        Ok(out)
    }
}
