//! Disentangled aspect-specific document embeddings.
//!
//! Each aspect has its own gated convolutional encoder on top of a shared word
//! embedding table and shared first convolution. Encoders are trained with an
//! aspect-wise triplet hinge loss on cosine similarity and evaluated with
//! retrieval AUC and cross-AUC. Gate activations give per-token saliency.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the `f64` instantiation used for training and gradient checks.

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod io;
pub mod scalar;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub type Model = encoder::AspectModel<f64>;
pub type Model32 = encoder::AspectModel<f32>;
pub type Gradients = encoder::GradientSet<f64>;
pub type ModelCheckpoint = encoder::Checkpoint<f64>;
pub type Adam = training::AdamState<f64>;
pub type Affinity = eval::AffinityMatrix<f64>;
