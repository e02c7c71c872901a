//! Evaluation metrics: mean top-k hit rate, ROC-AUC, accuracy, confusion
//! matrices, and nearest-neighbor / cross-validation helpers.

use crate::analysis::average_ranks;
use crate::error::{Error, Result};
use crate::numerics::{tag64, Pcg32, Tensor};

/// Scores and binary ground truth for a batch, rows = samples.
#[derive(Debug, Clone)]
pub struct PredictionBatch {
    pub p: Tensor,
    pub y: Tensor,
}

impl PredictionBatch {
    pub fn new(p: Tensor, y: Tensor) -> Result<Self> {
        if p.rank() != 2 || p.shape() != y.shape() {
            return Err(Error::Shape(format!(
                "score shape {:?} vs truth shape {:?}",
                p.shape(),
                y.shape()
            )));
        }
        if let Some(&bad) = y.data().iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::Label(format!("ground truth must be 0 or 1, got {bad}")));
        }
        Ok(PredictionBatch { p, y })
    }

    pub fn len(&self) -> usize {
        self.p.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn categories(&self) -> usize {
        self.p.cols()
    }
}

/// Indices of the k highest scores, ties broken by ascending index.
pub fn topk_indices(scores: &[f32], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Fraction of the top-k predictions that hit the ground-truth set,
/// normalized by min(k, |truth|).
pub fn mtopk_single(scores: &[f32], truth: &[f32], k: usize) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} scores vs {} truth entries",
            scores.len(),
            truth.len()
        )));
    }
    if k == 0 || k > scores.len() {
        return Err(Error::InvalidRange(format!(
            "k = {k} outside 1..={}",
            scores.len()
        )));
    }
    if let Some(&bad) = truth.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Label(format!("ground truth must be 0 or 1, got {bad}")));
    }
    let gt = truth.iter().filter(|&&v| v == 1.0).count();
    if gt == 0 {
        return Err(Error::NoGroundTruth);
    }
    let hits = topk_indices(scores, k)
        .into_iter()
        .filter(|&i| truth[i] == 1.0)
        .count();
    Ok(hits as f64 / k.min(gt) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtopkResult {
    pub value: f64,
    /// Rows without any positive ground truth, excluded from the mean.
    pub excluded_rows: usize,
}

/// Mean of `mtopk_single` over all rows that have ground truth.
pub fn mtopk(batch: &PredictionBatch, k: usize) -> Result<MtopkResult> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0f64;
    let mut counted = 0usize;
    let mut excluded = 0usize;
    for r in 0..batch.len() {
        match mtopk_single(batch.p.row(r), batch.y.row(r), k) {
            Ok(v) => {
                total += v;
                counted += 1;
            }
            Err(Error::NoGroundTruth) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    if counted == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok(MtopkResult {
        value: total / counted as f64,
        excluded_rows: excluded,
    })
}

/// Mann-Whitney ROC-AUC from average ranks; tied scores contribute half.
pub fn roc_auc(scores: &[f32], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateClass(format!(
            "need both label values, got {n_pos} positive / {n_neg} negative"
        )));
    }
    let as_f64: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
    let ranks = average_ranks(&as_f64);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(&r, _)| r)
        .sum();
    let auc = (rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos * n_neg) as f64;
    Ok(auc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroAucResult {
    pub value: f64,
    /// Classes skipped because only one label value was present.
    pub skipped_classes: usize,
}

/// Mean per-class ROC-AUC over classes with both label values.
pub fn macro_auc(batch: &PredictionBatch) -> Result<MacroAucResult> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let (n, c) = (batch.len(), batch.categories());
    let mut total = 0.0f64;
    let mut counted = 0usize;
    let mut skipped = 0usize;
    for class in 0..c {
        let scores: Vec<f32> = (0..n).map(|r| batch.p.at2(r, class)).collect();
        let labels: Vec<bool> = (0..n).map(|r| batch.y.at2(r, class) == 1.0).collect();
        match roc_auc(&scores, &labels) {
            Ok(v) => {
                total += v;
                counted += 1;
            }
            Err(Error::DegenerateClass(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if counted == 0 {
        return Err(Error::DegenerateClass(
            "every class was degenerate".into(),
        ));
    }
    Ok(MacroAucResult {
        value: total / counted as f64,
        skipped_classes: skipped,
    })
}

pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    if preds.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Square count matrix with rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<u64>,
    pub classes: usize,
}

impl ConfusionMatrix {
    pub fn at(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn confusion(preds: &[usize], labels: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut counts = vec![0u64; classes * classes];
    for (&p, &l) in preds.iter().zip(labels) {
        if p >= classes || l >= classes {
            return Err(Error::Label(format!(
                "class pair ({l}, {p}) outside 0..{classes}"
            )));
        }
        counts[l * classes + p] += 1;
    }
    Ok(ConfusionMatrix { counts, classes })
}

/// Argmax over each row, ties to the lowest index.
pub fn hard_labels_argmax(p: &Tensor) -> Vec<usize> {
    (0..p.rows())
        .map(|r| {
            let row = p.row(r);
            row.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .map_or(0, |(i, _)| i)
        })
        .collect()
}

/// Binary decision per row from a single-column score at threshold 0.5.
pub fn hard_labels_threshold(p: &Tensor) -> Vec<usize> {
    (0..p.rows()).map(|r| usize::from(p.row(r)[0] >= 0.5)).collect()
}

/// k-nearest-neighbor vote under Euclidean distance. Distance ties prefer
/// the lower sample index; vote ties prefer the lower class id.
pub fn knn_classify(
    train: &Tensor,
    train_labels: &[usize],
    query: &[f32],
    k: usize,
) -> Result<usize> {
    if train.rank() != 2 || train.rows() != train_labels.len() {
        return Err(Error::Shape(format!(
            "training matrix {:?} vs {} labels",
            train.shape(),
            train_labels.len()
        )));
    }
    if train.rows() == 0 || k == 0 {
        return Err(Error::EmptyBatch);
    }
    if query.len() != train.cols() {
        return Err(Error::Shape(format!(
            "query has {} dims, training points have {}",
            query.len(),
            train.cols()
        )));
    }
    let mut dist: Vec<(f64, usize)> = (0..train.rows())
        .map(|r| {
            let d: f64 = train
                .row(r)
                .iter()
                .zip(query)
                .map(|(&a, &b)| ((a - b) as f64).powi(2))
                .sum();
            (d, r)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let k = k.min(dist.len());
    let mut votes = std::collections::BTreeMap::new();
    for &(_, r) in &dist[..k] {
        *votes.entry(train_labels[r]).or_insert(0usize) += 1;
    }
    Ok(votes
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .unwrap()
        .0)
}

/// Deterministic near-equal partition of 0..n into `folds` index sets.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Fold(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::Fold(format!("{folds} folds over {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Pcg32::derive(seed, &[tag64("kfold")]);
    rng.shuffle(&mut order);
    Ok((0..folds)
        .map(|i| order[i * n / folds..(i + 1) * n / folds].to_vec())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KfoldResult {
    pub per_fold: Vec<f64>,
    pub mean: f64,
}

/// Run `eval(train_indices, test_indices)` per fold and average.
pub fn kfold_cv<F>(n: usize, folds: usize, seed: u64, mut eval: F) -> Result<KfoldResult>
where
    F: FnMut(&[usize], &[usize]) -> Result<f64>,
{
    let parts = kfold_indices(n, folds, seed)?;
    let mut per_fold = Vec::with_capacity(folds);
    for i in 0..folds {
        let test = &parts[i];
        let train: Vec<usize> = parts
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, p)| p.iter().copied())
            .collect();
        per_fold.push(eval(&train, test)?);
    }
    let mean = per_fold.iter().sum::<f64>() / folds as f64;
    Ok(KfoldResult { per_fold, mean })
}
