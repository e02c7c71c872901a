//! Principal component analysis on top of the Jacobi eigensolver.

use crate::error::{Error, Result};
use crate::numerics::{sym_eig, Tensor};

/// Top-k principal axes of a data matrix. Components are unit rows in
/// descending explained-variance order; signs are fixed so each row's
/// largest-magnitude entry is positive.
#[derive(Debug, Clone)]
pub struct Pca {
    pub components: Vec<f64>,
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
    pub k: usize,
    pub d: usize,
}

impl Pca {
    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.d..(i + 1) * self.d]
    }

    /// Project one observation onto the retained components.
    pub fn project(&self, row: &[f32]) -> Result<Vec<f64>> {
        if row.len() != self.d {
            return Err(Error::Shape(format!(
                "projection input has {} features, pca has {}",
                row.len(),
                self.d
            )));
        }
        let centered: Vec<f64> = row
            .iter()
            .zip(&self.mean)
            .map(|(&x, &m)| x as f64 - m)
            .collect();
        Ok((0..self.k)
            .map(|i| {
                self.component(i)
                    .iter()
                    .zip(&centered)
                    .map(|(c, x)| c * x)
                    .sum()
            })
            .collect())
    }
}

/// Fit PCA on an n x d observation matrix (covariance with divisor n - 1).
pub fn pca(x: &Tensor, k: usize) -> Result<Pca> {
    if x.rank() != 2 {
        return Err(Error::Shape(format!(
            "pca needs a rank-2 tensor, got {:?}",
            x.shape()
        )));
    }
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::Shape(format!("pca needs at least 2 rows, got {n}")));
    }
    if k == 0 || k > n.min(d) {
        return Err(Error::Shape(format!(
            "component count {k} outside 1..=min(n={n}, d={d})"
        )));
    }

    let mut mean = vec![0.0f64; d];
    for i in 0..n {
        for (j, m) in mean.iter_mut().enumerate() {
            *m += x.at2(i, j) as f64;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let centered: Vec<f64> = (0..n)
        .flat_map(|i| {
            let mean = &mean;
            (0..d).map(move |j| x.at2(i, j) as f64 - mean[j])
        })
        .collect();

    let mut cov = vec![0.0f64; d * d];
    for row in centered.chunks_exact(d) {
        for a in 0..d {
            let ra = row[a];
            if ra == 0.0 {
                continue;
            }
            for b in a..d {
                cov[a * d + b] += ra * row[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov[a * d + b] / denom;
            cov[a * d + b] = v;
            cov[b * d + a] = v;
        }
    }

    let eig = sym_eig(&cov, d)?;
    let mut components = Vec::with_capacity(k * d);
    let mut explained = Vec::with_capacity(k);
    for i in 0..k {
        // Covariance eigenvalues are >= 0 up to roundoff; clamp the dust.
        explained.push(eig.values[i].max(0.0));
        components.extend_from_slice(&signed(eig.vector(i)));
    }
    Ok(Pca {
        components,
        explained_variance: explained,
        mean,
        k,
        d,
    })
}

/// Fix a component's sign: largest-magnitude entry (first on ties) positive.
fn signed(v: &[f64]) -> Vec<f64> {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter().map(|x| -x).collect()
    } else {
        v.to_vec()
    }
}
