//! Numeric kernels: tensors, deterministic RNG, Adam, eigensolver, PCA.

mod adam;
mod eig;
mod pca;
mod rng;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use eig::{sym_eig, sym_eig_tensor, SymEig};
pub use pca::{pca, Pca};
pub use rng::{mix, tag64, Pcg32};
pub use tensor::Tensor;
