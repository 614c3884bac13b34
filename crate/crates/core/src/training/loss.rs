use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use crate::corpus::EncodedDocument;
use crate::encoder::{cosine_similarity, AspectModel, ForwardResult, Parameters};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Aspect-specific supervision: `d` should be closer to `s` than to `o`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub s: EncodedDocument,
    pub d: EncodedDocument,
    pub o: EncodedDocument,
    pub aspect: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletBatch {
    pub items: Vec<Triplet>,
}

impl TripletBatch {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn docs(&self) -> impl Iterator<Item = &EncodedDocument> {
        self.items.iter().flat_map(|t| [&t.s, &t.d, &t.o])
    }
}

/// `max(0, margin - cos(d, s) + cos(d, o))`.
pub fn triplet_hinge_loss<T: Scalar>(e_s: &[T], e_d: &[T], e_o: &[T], margin: T) -> T {
    (margin - cosine_similarity(e_d, e_s) + cosine_similarity(e_d, e_o)).max(T::zero())
}

/// Encoder outputs for every document of a batch, in `[s, d, o]` order per triplet.
#[derive(Debug, Clone)]
pub struct BatchForward<T> {
    pub items: Vec<[ForwardResult<T>; 3]>,
    pub aspects: Vec<usize>,
}

impl<T: Scalar> BatchForward<T> {
    pub fn gates(&self) -> impl Iterator<Item = &[T]> {
        self.items.iter().flat_map(|r| r.iter().map(|x| x.gates.as_slice()))
    }
}

pub fn forward_triplet<T: Scalar>(model: &AspectModel<T>, t: &Triplet) -> Result<[ForwardResult<T>; 3]> {
    Ok([
        model.forward_aspect(&t.s, t.aspect)?,
        model.forward_aspect(&t.d, t.aspect)?,
        model.forward_aspect(&t.o, t.aspect)?,
    ])
}

pub fn forward_batch<T: Scalar>(model: &AspectModel<T>, batch: &TripletBatch) -> Result<BatchForward<T>> {
    if batch.is_empty() {
        return Err(Error::config("triplet batch is empty"));
    }
    let items = batch
        .items
        .iter()
        .map(|t| forward_triplet(model, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchForward {
        items,
        aspects: batch.items.iter().map(|t| t.aspect).collect(),
    })
}

/// Objective value and its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective<T> {
    pub total: T,
    pub hinge: T,
    pub l2: T,
    pub l1: T,
    pub per_example: Vec<T>,
}

/// `sum ||theta||^2` over all trainable parameters. The pad row is zero and contributes nothing.
pub fn l2_penalty<T: Scalar>(params: &Parameters<T>) -> T {
    params.tensors().iter().map(|t| t.sum_squares()).sum()
}

/// Mean hinge loss, plus `lambda_l2 * sum ||theta||^2`, plus `lambda_l1` times the
/// mean over the batch's documents of each document's gate sum.
pub fn objective_from_forward<T: Scalar>(model: &AspectModel<T>, fwd: &BatchForward<T>, config: &TrainConfig) -> Objective<T> {
    let margin = T::of(config.margin);
    let per_example: Vec<T> = fwd
        .items
        .iter()
        .map(|[s, d, o]| triplet_hinge_loss(&s.embedding, &d.embedding, &o.embedding, margin))
        .collect();
    let b = T::from_usize(per_example.len()).expect("batch size fits");
    let hinge = per_example.iter().copied().sum::<T>() / b;
    let l2 = T::of(config.lambda_l2) * l2_penalty(&model.params);
    let gate_sum: T = fwd.gates().map(|g| g.iter().copied().sum::<T>()).sum();
    let l1 = T::of(config.lambda_l1) * gate_sum / (b * T::of(3.0));
    Objective {
        total: hinge + l2 + l1,
        hinge,
        l2,
        l1,
        per_example,
    }
}

pub fn total_objective<T: Scalar>(model: &AspectModel<T>, batch: &TripletBatch, config: &TrainConfig) -> Result<Objective<T>> {
    let fwd = forward_batch(model, batch)?;
    Ok(objective_from_forward(model, &fwd, config))
}
