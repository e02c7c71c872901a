//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Works in f64 regardless of the f32 tensor storage: the downstream
//! consumers (PCA, 2-D projections) need orthonormality far below f32
//! resolution. Matrices here are at most a few hundred square, where Jacobi
//! is simple, robust, and plenty fast.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-6;

/// Eigenvalues in descending order; `vectors` is row-major with row i
/// holding the unit eigenvector for `values[i]`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl SymEig {
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.n..(i + 1) * self.n]
    }
}

/// Decompose a symmetric n x n matrix given in row-major order.
pub fn sym_eig(matrix: &[f64], n: usize) -> Result<SymEig> {
    if matrix.len() != n * n {
        return Err(Error::Shape(format!(
            "expected {n}x{n} matrix, got {} elements",
            matrix.len()
        )));
    }
    if n == 0 {
        return Err(Error::Shape("empty matrix".into()));
    }
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((matrix[i * n + j] - matrix[j * n + i]).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::Numeric(format!(
            "matrix not symmetric: max |a_ij - a_ji| = {asym:e}"
        )));
    }

    // Work on the symmetrized copy so tiny input asymmetry cannot bias the
    // rotations.
    let mut a = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (matrix[i * n + j] + matrix[j * n + i]);
        }
    }
    let fro: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-12f64.max(1e-15 * fro);

    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() < tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    let new_ip = aip - s * (aiq + tau * aip);
                    let new_iq = aiq + s * (aip - tau * aiq);
                    a[i * n + p] = new_ip;
                    a[p * n + i] = new_ip;
                    a[i * n + q] = new_iq;
                    a[q * n + i] = new_iq;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = vip - s * (viq + tau * vip);
                    v[i * n + q] = viq + s * (vip - tau * viq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "jacobi did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    // Sort eigenpairs by descending eigenvalue; V columns become rows.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![0.0f64; n * n];
    for (row, &col) in order.iter().enumerate() {
        values.push(a[col * n + col]);
        for i in 0..n {
            vectors[row * n + i] = v[i * n + col];
        }
    }
    Ok(SymEig { values, vectors, n })
}

/// Tensor front-end for [`sym_eig`]: takes a square rank-2 tensor.
pub fn sym_eig_tensor(t: &Tensor) -> Result<SymEig> {
    if t.rank() != 2 || t.rows() != t.cols() {
        return Err(Error::Shape(format!(
            "sym_eig needs a square rank-2 tensor, got {:?}",
            t.shape()
        )));
    }
    let m: Vec<f64> = t.data().iter().map(|&x| x as f64).collect();
    sym_eig(&m, t.rows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Pcg32;

    fn reconstruct(e: &SymEig) -> Vec<f64> {
        let n = e.n;
        let mut m = vec![0.0; n * n];
        for k in 0..n {
            let vk = e.vector(k);
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += e.values[k] * vk[i] * vk[j];
                }
            }
        }
        m
    }

    fn random_symmetric(n: usize, rng: &mut Pcg32) -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = rng.normal();
                m[i * n + j] = x;
                m[j * n + i] = x;
            }
        }
        m
    }

    #[test]
    fn diagonal_matrix_is_its_own_decomposition() {
        let e = sym_eig(&[3.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vector(0), &[1.0, 0.0]);
        assert_eq!(e.vector(1), &[0.0, 1.0]);
    }

    #[test]
    fn two_by_two_known_case() {
        let e = sym_eig(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        let r = 0.5f64.sqrt();
        let v0 = e.vector(0);
        assert!((v0[0].abs() - r).abs() < 1e-12 && (v0[1].abs() - r).abs() < 1e-12);
        assert!((v0[0] - v0[1]).abs() < 1e-12, "eigenvector for 3 is along (1,1)");
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let r = sym_eig(&[1.0, 0.5, 0.0, 1.0], 2);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }

    #[test]
    fn random_matrices_satisfy_eigen_identities() {
        let mut rng = Pcg32::new(2024, 17);
        for round in 0..25 {
            let n = 2 + (round % 9);
            let m = random_symmetric(n, &mut rng);
            let e = sym_eig(&m, n).unwrap();
            let norm: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt();

            // S v = lambda v
            for k in 0..n {
                let vk = e.vector(k);
                for i in 0..n {
                    let sv: f64 = (0..n).map(|j| m[i * n + j] * vk[j]).sum();
                    assert!(
                        (sv - e.values[k] * vk[i]).abs() <= 1e-6 * norm.max(1.0),
                        "residual too large (n={n}, k={k})"
                    );
                }
            }
            // orthonormal rows
            for i in 0..n {
                for j in 0..n {
                    let dot: f64 = e
                        .vector(i)
                        .iter()
                        .zip(e.vector(j))
                        .map(|(a, b)| a * b)
                        .sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-8, "gram[{i}][{j}] = {dot}");
                }
            }
            // descending order and exact reconstruction
            for w in e.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
            for (x, y) in reconstruct(&e).iter().zip(&m) {
                assert!((x - y).abs() < 1e-9 * norm.max(1.0));
            }
        }
    }

    #[test]
    fn agrees_with_independent_dense_solver() {
        let mut rng = Pcg32::new(55, 3);
        for _ in 0..10 {
            let n = 6;
            let m = random_symmetric(n, &mut rng);
            let ours = sym_eig(&m, n).unwrap();
            let dm = nalgebra::DMatrix::from_row_slice(n, n, &m);
            let oracle = dm.symmetric_eigen();
            let mut oracle_vals: Vec<f64> = oracle.eigenvalues.iter().copied().collect();
            oracle_vals.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in ours.values.iter().zip(&oracle_vals) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_matrix_yields_identity_basis() {
        let e = sym_eig(&[0.0; 9], 3).unwrap();
        assert_eq!(e.values, vec![0.0, 0.0, 0.0]);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(e.vector(i)[j], want);
            }
        }
    }
}
