use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture and regularization settings of the gated convolutional encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Fixed document length `N`.
    pub seq_len: usize,
    /// Word embedding width `m`.
    pub embed_dim: usize,
    /// Feature maps per convolutional layer `k`.
    pub filters: usize,
    /// Kernel window `F`; must be odd so zero padding preserves length.
    pub window: usize,
    /// Convolutional layers `L`, the first one shared across aspects.
    pub layers: usize,
    pub n_aspects: usize,
    pub lambda_l2: f64,
    pub lambda_l1: f64,
}

impl EncoderConfig {
    /// Three layers of 200 filters, window 5, 200-d embeddings, L2 1e-5, gate L1 1e-6.
    pub fn new(seq_len: usize, n_aspects: usize) -> Result<Self> {
        let cfg = Self {
            seq_len,
            embed_dim: 200,
            filters: 200,
            window: 5,
            layers: 3,
            n_aspects,
            lambda_l2: 1e-5,
            lambda_l1: 1e-6,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("seq_len", self.seq_len),
            ("embed_dim", self.embed_dim),
            ("filters", self.filters),
            ("window", self.window),
            ("layers", self.layers),
            ("n_aspects", self.n_aspects),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if self.window % 2 == 0 {
            return Err(Error::config(format!("window must be odd, got {}", self.window)));
        }
        for (name, v) in [("lambda_l2", self.lambda_l2), ("lambda_l1", self.lambda_l1)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }

    /// Half-width of the kernel window.
    pub fn half_window(&self) -> usize {
        (self.window - 1) / 2
    }
}
