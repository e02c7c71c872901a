//! Binary cross entropy over per-category probabilities.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

fn check_binary(y: &Tensor) -> Result<()> {
    if let Some(&bad) = y.data().iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Label(format!("targets must be 0 or 1, got {bad}")));
    }
    Ok(())
}

fn clamped_term(h: f32, y: f32, eps: f32) -> f64 {
    let p = (h.clamp(eps, 1.0 - eps)) as f64;
    if y == 1.0 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Loss and its gradient with respect to the logits for one sample.
///
/// The loss sums -[y ln p + (1-y) ln(1-p)] over categories with
/// probabilities clamped to [eps, 1-eps]; the gradient is the unclamped
/// `h - y`.
pub fn bce_loss(h: &Tensor, y: &Tensor, eps: f32) -> Result<(f64, Tensor)> {
    if h.shape() != y.shape() {
        return Err(Error::Shape(format!(
            "probability shape {:?} vs target shape {:?}",
            h.shape(),
            y.shape()
        )));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Numeric(format!("clamp {eps} outside (0, 0.5)")));
    }
    check_binary(y)?;
    let loss: f64 = h
        .data()
        .iter()
        .zip(y.data())
        .map(|(&hv, &yv)| clamped_term(hv, yv, eps))
        .sum();
    let grad = h.sub(y)?;
    Ok((loss, grad))
}

/// Mean per-sample loss over a batch (rows are samples) and the gradient
/// with respect to the logits, (h - y) / batch.
pub fn bce_batch(h: &Tensor, y: &Tensor, eps: f32) -> Result<(f64, Tensor)> {
    if h.rank() != 2 || h.shape() != y.shape() {
        return Err(Error::Shape(format!(
            "batch shapes {:?} vs {:?}",
            h.shape(),
            y.shape()
        )));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Numeric(format!("clamp {eps} outside (0, 0.5)")));
    }
    check_binary(y)?;
    let batch = h.rows();
    if batch == 0 {
        return Err(Error::EmptyBatch);
    }
    let loss: f64 = h
        .data()
        .iter()
        .zip(y.data())
        .map(|(&hv, &yv)| clamped_term(hv, yv, eps))
        .sum::<f64>()
        / batch as f64;
    let grad = h.sub(y)?.scale(1.0 / batch as f32)?;
    Ok((loss, grad))
}
