//! JSON model checkpoints.

use serde::{Deserialize, Serialize};

use super::config::EncoderConfig;
use super::params::{AspectModel, Parameters};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const CHECKPOINT_FORMAT: &str = "aspect-embed-checkpoint/1";

/// A tensor stored row-major under its canonical parameter name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NamedTensor<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

/// Where a seed entered the model's history (`init`, `train`, `resume`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub stage: String,
    pub seed: u64,
}

/// Adam moments and step count, stored in the same tensor order as the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OptimizerSnapshot<T> {
    pub step: u64,
    pub first_moment: Vec<NamedTensor<T>>,
    pub second_moment: Vec<NamedTensor<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Checkpoint<T> {
    pub format: String,
    pub config: EncoderConfig,
    pub pad_id: u32,
    pub vocab_hash: String,
    pub seed_lineage: Vec<SeedRecord>,
    /// Completed training epochs.
    pub epoch: usize,
    pub tensors: Vec<NamedTensor<T>>,
    pub optimizer: Option<OptimizerSnapshot<T>>,
}

pub(crate) fn to_named<T: Scalar>(params: &Parameters<T>) -> Vec<NamedTensor<T>> {
    params
        .named_tensors()
        .into_iter()
        .map(|(name, t)| NamedTensor {
            name,
            shape: t.shape().to_vec(),
            data: t.data().to_vec(),
        })
        .collect()
}

/// Fills a parameter container of the right architecture from named tensors.
pub(crate) fn from_named<T: Scalar>(config: &EncoderConfig, tensors: &[NamedTensor<T>]) -> Result<Parameters<T>> {
    let vocab = tensors
        .first()
        .filter(|t| t.name == "embedding" && t.shape.len() == 2)
        .ok_or_else(|| Error::Checkpoint("first tensor must be the 2-d embedding".into()))?
        .shape[0];
    let mut params = Parameters::<T>::zeros(config, vocab);
    let slots = params.named_tensors().into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect::<Vec<_>>();
    if slots.len() != tensors.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} tensors for this config, found {}",
            slots.len(),
            tensors.len()
        )));
    }
    for ((slot, (name, shape)), stored) in params.tensors_mut().into_iter().zip(slots).zip(tensors) {
        if stored.name != name || stored.shape != shape {
            return Err(Error::Checkpoint(format!(
                "tensor `{}` {:?} does not match expected `{name}` {shape:?}",
                stored.name, stored.shape
            )));
        }
        if stored.data.len() != shape.iter().product::<usize>() {
            return Err(Error::Checkpoint(format!("tensor `{name}` has wrong data length")));
        }
        *slot = Tensor::from_vec(&shape, stored.data.clone());
    }
    Ok(params)
}

impl<T: Scalar> Checkpoint<T> {
    pub fn from_model(model: &AspectModel<T>, vocab_hash: impl Into<String>, seed_lineage: Vec<SeedRecord>, epoch: usize) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_owned(),
            config: model.config.clone(),
            pad_id: model.pad_id,
            vocab_hash: vocab_hash.into(),
            seed_lineage,
            epoch,
            tensors: to_named(&model.params),
            optimizer: None,
        }
    }

    pub fn model(&self) -> Result<AspectModel<T>> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unsupported format `{}`", self.format)));
        }
        let model = AspectModel {
            config: self.config.clone(),
            pad_id: self.pad_id,
            params: from_named(&self.config, &self.tensors)?,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn check_vocab(&self, vocab_hash: &str) -> Result<()> {
        if self.vocab_hash != vocab_hash {
            return Err(Error::VocabularyMismatch {
                expected: self.vocab_hash.clone(),
                actual: vocab_hash.to_owned(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::init_model;

    #[test]
    fn json_round_trip_is_byte_stable() {
        let cfg = EncoderConfig {
            seq_len: 5,
            embed_dim: 3,
            filters: 2,
            window: 3,
            layers: 2,
            n_aspects: 2,
            lambda_l2: 1e-5,
            lambda_l1: 1e-6,
        };
        let m: AspectModel<f64> = init_model(&cfg, 7, 0, 13).unwrap();
        let ck = Checkpoint::from_model(&m, "abc", vec![SeedRecord { stage: "init".into(), seed: 13 }], 0);
        let json = ck.to_json().unwrap();
        let back = Checkpoint::<f64>::from_json(&json).unwrap();
        assert_eq!(back.to_json().unwrap(), json);
        assert_eq!(back.model().unwrap(), m);
        assert!(back.check_vocab("abc").is_ok());
        assert!(matches!(back.check_vocab("xyz"), Err(Error::VocabularyMismatch { .. })));
    }

    #[test]
    fn tampered_shapes_are_rejected() {
        let cfg = EncoderConfig {
            seq_len: 5,
            embed_dim: 3,
            filters: 2,
            window: 3,
            layers: 2,
            n_aspects: 1,
            lambda_l2: 0.0,
            lambda_l1: 0.0,
        };
        let m: AspectModel<f64> = init_model(&cfg, 7, 0, 1).unwrap();
        let mut ck = Checkpoint::from_model(&m, "h", vec![], 0);
        ck.tensors[2].shape = vec![3];
        assert!(ck.model().is_err());
        let mut ck = Checkpoint::from_model(&m, "h", vec![], 0);
        ck.tensors.pop();
        assert!(ck.model().is_err());
    }
}
