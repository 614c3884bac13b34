//! Triplet sampling, objective, gradients, Adam and the training loop.

mod adam;
mod backward;
mod config;
mod loss;
mod sampler;
mod trainer;

pub use adam::{adam_step, AdamState};
pub use backward::{backward, objective_and_gradient};
pub use config::TrainConfig;
pub use loss::{
    forward_batch, forward_triplet, l2_penalty, objective_from_forward, total_objective, triplet_hinge_loss,
    BatchForward, Objective, Triplet, TripletBatch,
};
pub use sampler::{RatingPool, ReviewDraw, ReviewPool, ReviewStudy, TripletSource, MAX_GROUP_RETRIES};
pub use trainer::{
    mean_gate_activation, metrics_jsonl, probe_objective, resume, split_source, train, EpochLog, TrainOutcome,
    TrainingData,
};
