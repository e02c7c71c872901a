//! smileybench-core: a deterministic pipeline for emoji-supervised visual
//! sentiment analysis.
//!
//! The crate covers the full desk-scale path: an emoji taxonomy over
//! tweet-like records ([`emoji`], [`corpus`]), temporally balanced dataset
//! construction ([`sampler`]), a small multi-label embedding network with
//! its own numeric kernels ([`model`], [`numerics`]), and the evaluation
//! and analysis layers ([`metrics`], [`analysis`]).
//!
//! Everything is seeded and single-ordered: identical inputs, configuration
//! and seed reproduce identical artifacts byte for byte.

pub mod analysis;
pub mod corpus;
pub mod emoji;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod ppm;
pub mod sampler;

pub use error::{Error, Result};
pub use numerics::Tensor;
