//! Domain adaptive neural network (DaNN) core.
//!
//! A single-hidden-layer softplus/softmax classifier trained on labeled source
//! samples while a Gaussian-kernel maximum mean discrepancy (MMD) penalty pulls
//! the first-layer pre-activations of source and target samples together.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CSV loading and
//! the command-line front end live in the companion `dann` crate.
//!
//! Module map:
//!
//! - [`matrix`] / [`rng`]: dense row-major `f64` matrices and a seeded stream.
//! - [`kernel`]: Gaussian kernel, gram matrices, biased MMD² and its gradient
//!   with respect to the augmented first-layer weights.
//! - [`network`]: forward pass, log-likelihood loss, backpropagation, momentum.
//! - [`dae`]: zero-masking denoising auto-encoder used to initialise `U1`.
//! - [`data`]: datasets, z-scoring, one-hot labels, synthetic covariate shift.
//! - [`trainer`]: the two-step training loop (mini-batch SGD, then full-batch
//!   MMD descent on `U1`) and evaluation.
#![no_std]
// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dae;
pub mod data;
mod error;
pub mod kernel;
pub mod matrix;
pub mod network;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rng::RandomStream;
