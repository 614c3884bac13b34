//! Gated convolutional aspect encoder: parameters, forward pass, checkpoints.

mod checkpoint;
mod config;
mod conv;
mod forward;
mod params;
mod similarity;

pub use checkpoint::{Checkpoint, NamedTensor, OptimizerSnapshot, SeedRecord, CHECKPOINT_FORMAT};
pub(crate) use checkpoint::{from_named, to_named};
pub use config::EncoderConfig;
pub use conv::{conv_layer_forward, conv_pre_activation, prelu};
pub(crate) use conv::{conv_backward, prelu_backward};
pub use forward::{pool_with_gates, sigmoid, ForwardCache, ForwardResult};
pub use params::{
    conv_init_bound, glorot_bound, init_model, AspectEncoder, AspectModel, ConvLayer, GateHead, GradientSet,
    Parameters, EMBEDDING_INIT_BOUND, PRELU_INIT,
};
pub use similarity::{cosine_similarity, COSINE_EPS};
pub(crate) use similarity::cosine_backward;
