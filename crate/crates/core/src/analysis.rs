//! Embedding-space analytics: rank correlations, per-emotion emoji
//! fingerprints, and 2-D projections.

use crate::error::{Error, Result};
use crate::numerics::{pca, Tensor};

/// 1-based ranks with ties assigned the mean of their rank span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the average of ranks i+1..=j+1.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank-order correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Undefined(format!(
            "rank correlation needs at least 3 observations, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite observation".into()));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    pearson(&rx, &ry)
        .ok_or_else(|| Error::Undefined("constant input has no rank ordering".into()))
}

/// Spearman correlation between every probability column and a binary
/// label; constant columns yield `None` rather than failing the batch.
pub fn correlate_dimensions(probs: &Tensor, labels: &[bool]) -> Result<Vec<Option<f64>>> {
    if probs.rank() != 2 || probs.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "probability matrix {:?} vs {} labels",
            probs.shape(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&b| b).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateClass(
            "labels must contain both values".into(),
        ));
    }
    let y: Vec<f64> = labels.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let (n, c) = (probs.rows(), probs.cols());
    let mut out = Vec::with_capacity(c);
    for col in 0..c {
        let x: Vec<f64> = (0..n).map(|r| probs.at2(r, col) as f64).collect();
        match spearman(&x, &y) {
            Ok(rho) => out.push(Some(rho)),
            Err(Error::Undefined(_)) => out.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// C x E matrix of one-vs-rest correlations between emoji categories and
/// emotion classes.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintMatrix {
    /// Row-major C x E; `None` marks a constant probability column.
    pub values: Vec<Option<f64>>,
    pub categories: usize,
    pub emotion_names: Vec<String>,
}

impl FingerprintMatrix {
    pub fn emotions(&self) -> usize {
        self.emotion_names.len()
    }

    pub fn at(&self, category: usize, emotion: usize) -> Option<f64> {
        self.values[category * self.emotions() + emotion]
    }

    /// One category's correlations across all emotions.
    pub fn row(&self, category: usize) -> &[Option<f64>] {
        let e = self.emotions();
        &self.values[category * e..(category + 1) * e]
    }

    /// One emotion's correlations across all categories.
    pub fn column(&self, emotion: usize) -> Vec<Option<f64>> {
        (0..self.categories).map(|c| self.at(c, emotion)).collect()
    }
}

pub fn fingerprint(
    probs: &Tensor,
    emotion_labels: &[usize],
    emotion_names: &[String],
) -> Result<FingerprintMatrix> {
    let e_count = emotion_names.len();
    if probs.rank() != 2 || probs.rows() != emotion_labels.len() {
        return Err(Error::Shape(format!(
            "probability matrix {:?} vs {} labels",
            probs.shape(),
            emotion_labels.len()
        )));
    }
    let mut counts = vec![0usize; e_count];
    for &l in emotion_labels {
        *counts
            .get_mut(l)
            .ok_or_else(|| Error::Label(format!("emotion label {l} outside 0..{e_count}")))? += 1;
    }
    if let Some(e) = counts.iter().position(|&n| n < 3) {
        return Err(Error::DegenerateClass(format!(
            "emotion class {} ({}) has {} samples, need at least 3",
            e, emotion_names[e], counts[e]
        )));
    }
    let c_count = probs.cols();
    let mut values = vec![None; c_count * e_count];
    for e in 0..e_count {
        let labels: Vec<bool> = emotion_labels.iter().map(|&l| l == e).collect();
        let rhos = correlate_dimensions(probs, &labels)?;
        for (c, rho) in rhos.into_iter().enumerate() {
            values[c * e_count + e] = rho;
        }
    }
    Ok(FingerprintMatrix {
        values,
        categories: c_count,
        emotion_names: emotion_names.to_vec(),
    })
}

/// Top-n entries of a correlation vector, descending by value with ties
/// broken by ascending id; undefined entries are skipped.
pub fn rank_top(values: &[Option<f64>], n: usize) -> Vec<(usize, f64)> {
    let mut present: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|rho| (i, rho)))
        .collect();
    present.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    present.truncate(n);
    present
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// N rows of (first component, second component) coordinates.
    pub coords: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    /// Two principal directions, each of length C.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

/// Project embedding probabilities onto their first two principal
/// components.
pub fn project_2d(probs: &Tensor, labels: &[usize]) -> Result<ProjectionResult> {
    if probs.rank() != 2 || probs.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "probability matrix {:?} vs {} labels",
            probs.shape(),
            labels.len()
        )));
    }
    if probs.rows() < 3 {
        return Err(Error::InvalidRange(format!(
            "projection needs at least 3 points, got {}",
            probs.rows()
        )));
    }
    let fitted = pca(probs, 2)?;
    let coords = (0..probs.rows())
        .map(|r| {
            let p = fitted.project(probs.row(r))?;
            Ok([p[0], p[1]])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectionResult {
        coords,
        labels: labels.to_vec(),
        components: vec![fitted.component(0).to_vec(), fitted.component(1).to_vec()],
        explained_variance: fitted.explained_variance.clone(),
    })
}
