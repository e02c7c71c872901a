//! Zero-shot sentiment from emoji category scores.
//!
//! Each category contributes its sigmoid probability, weighted by either a
//! hard sentiment sign (Bin) or its annotated continuous weight (Con). The
//! sign of the weighted sum decides the sentiment; an exact zero scores as
//! positive so the rule is total.

use crate::emoji::{EmojiTaxonomy, Sentiment};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZslMode {
    /// w_c = +1 for positive categories, -1 for negative.
    Bin,
    /// w_c = annotated continuous weight.
    Con,
}

/// Weighted sentiment score S = sum_c w_c * sigmoid(e_c).
pub fn zsl_score(e_scores: &Tensor, tax: &EmojiTaxonomy, mode: ZslMode) -> Result<f64> {
    if e_scores.rank() != 1 || e_scores.len() != tax.category_count() {
        return Err(Error::Shape(format!(
            "expected {} category scores, got shape {:?}",
            tax.category_count(),
            e_scores.shape()
        )));
    }
    let weights: Vec<f32> = match mode {
        ZslMode::Bin => tax.sentiment_signs()?,
        ZslMode::Con => tax.zsl_weights()?,
    };
    Ok(e_scores
        .data()
        .iter()
        .zip(&weights)
        .map(|(&logit, &w)| w as f64 / (1.0 + (-logit as f64).exp()))
        .sum())
}

pub fn zsl_predict(e_scores: &Tensor, tax: &EmojiTaxonomy, mode: ZslMode) -> Result<Sentiment> {
    Ok(if zsl_score(e_scores, tax, mode)? >= 0.0 {
        Sentiment::Positive
    } else {
        Sentiment::Negative
    })
}
