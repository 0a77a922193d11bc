//! A small reverse-mode core for 1-D convolutional networks over
//! channels × length sequences: convolution, batch norm, LeakyReLU,
//! column softmax with cross-entropy, Adam and finite-difference checks.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`).

mod adam;
mod gradcheck;
mod layers;
mod loss;
mod scalar;
mod tensor;

pub use adam::Adam;
pub use gradcheck::{grad_check, relative_error, Differentiable, GradCheckReport};
pub use layers::{batchnorm, conv1d, leaky_relu, BatchNorm1d, BnMode, Conv1d, LeakyRelu, Param};
pub use loss::{cross_entropy_columns, softmax_batch, softmax_columns, softmax_cross_entropy, PROB_FLOOR};
pub use scalar::Scalar;
pub use tensor::{Batch, Tensor2};
