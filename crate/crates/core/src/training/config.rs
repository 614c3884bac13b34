use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimization settings. Regularization strengths are copied from the
/// encoder config when a run is set up from the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub lambda_l2: f64,
    pub lambda_l1: f64,
    /// Triplets drawn per epoch; defaults to the number of training documents.
    pub triplets_per_epoch: Option<usize>,
    /// Size of the fixed triplet sets used to report train and validation objectives.
    pub probe_triplets: usize,
    /// Stop after this many epochs without validation improvement.
    pub patience: Option<usize>,
    /// Accumulate per-triplet gradients on the rayon pool. Not bit-reproducible.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 32,
            epochs: 30,
            seed: 0,
            lambda_l2: 1e-5,
            lambda_l1: 1e-6,
            triplets_per_epoch: None,
            probe_triplets: 256,
            patience: Some(5),
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        let nonneg = [
            ("margin", self.margin),
            ("learning_rate", self.learning_rate),
            ("adam_eps", self.adam_eps),
            ("lambda_l2", self.lambda_l2),
            ("lambda_l1", self.lambda_l1),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and non-negative")));
            }
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::config(format!("{name} must lie in [0, 1)")));
            }
        }
        if self.triplets_per_epoch == Some(0) {
            return Err(Error::config("triplets_per_epoch must be positive"));
        }
        Ok(())
    }
}
