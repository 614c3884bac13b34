//! Analytic gradients of the training objective.

use rayon::prelude::*;

use super::config::TrainConfig;
use super::loss::{
    forward_batch, forward_triplet, l2_penalty, objective_from_forward, triplet_hinge_loss, BatchForward, Objective,
    TripletBatch,
};
use crate::encoder::{conv_backward, cosine_backward, cosine_similarity, prelu_backward, AspectModel, ForwardResult, GradientSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Backpropagates `d_embedding` (and a constant `l1_coef` on every unmasked
/// gate) through one document's forward pass, accumulating into `grads`.
fn backward_document<T: Scalar>(
    model: &AspectModel<T>,
    result: &ForwardResult<T>,
    aspect: usize,
    d_embedding: &[T],
    l1_coef: T,
    grads: &mut GradientSet<T>,
) {
    let cache = &result.cache;
    let n = cache.ids.len();
    let k = model.config.filters;
    let enc = &model.params.aspects[aspect];
    let w = enc.gate.weight.data();

    // Gating and pooling: e = sum_t g_t S_t with g_t = sigmoid(S_t . w + b).
    let mut d_summed = Tensor::<T>::zeros(&[n, k]);
    {
        let gate_grads = &mut grads.aspects[aspect].gate;
        for t in 0..cache.true_len {
            let row = cache.summed.row(t);
            let g = result.gates[t];
            let d_g = row.iter().zip(d_embedding).map(|(&h, &de)| h * de).sum::<T>() + l1_coef;
            let d_z = d_g * g * (T::one() - g);
            for (dw, &h) in gate_grads.weight.data_mut().iter_mut().zip(row) {
                *dw += d_z * h;
            }
            gate_grads.bias.data_mut()[0] += d_z;
            for ((ds, &de), &wv) in d_summed.row_mut(t).iter_mut().zip(d_embedding).zip(w) {
                *ds += g * de + d_z * wv;
            }
        }
    }

    // Dense residual stack: S = H_1 + .. + H_L and X_l = H_1 + .. + H_{l-1}.
    // Walking layers top-down, `carried` holds the sum of dX over layers above.
    let n_layers = cache.outputs.len();
    let mut carried = Tensor::<T>::zeros(&[n, k]);
    for l in (0..n_layers).rev() {
        let mut d_h = d_summed.clone();
        d_h.add_assign(&carried);
        let (layer, layer_grads) = if l == 0 {
            (&model.params.conv1, &mut grads.conv1)
        } else {
            (&enc.convs[l - 1], &mut grads.aspects[aspect].convs[l - 1])
        };
        let d_pre = prelu_backward(&cache.pre[l], &layer.prelu_alpha, &d_h, &mut layer_grads.prelu_alpha);
        let d_x = conv_backward(
            &cache.inputs[l],
            &layer.kernel,
            &d_pre,
            &mut layer_grads.kernel,
            &mut layer_grads.bias,
            true,
        )
        .expect("input gradient requested");
        if l == 0 {
            for (t, &id) in cache.ids.iter().enumerate() {
                if id == model.pad_id {
                    continue;
                }
                for (g, &dv) in grads.embedding.row_mut(id as usize).iter_mut().zip(d_x.row(t)) {
                    *g += dv;
                }
            }
        } else {
            carried.add_assign(&d_x);
        }
    }
}

/// Accumulates one triplet's contribution (hinge and gate L1) into `grads`.
fn backward_triplet<T: Scalar>(
    model: &AspectModel<T>,
    results: &[ForwardResult<T>; 3],
    aspect: usize,
    config: &TrainConfig,
    batch_len: usize,
    grads: &mut GradientSet<T>,
) {
    let [s, d, o] = results;
    let b = T::from_usize(batch_len).expect("batch size fits");
    let margin = T::of(config.margin);
    let k = d.embedding.len();
    let mut d_s = vec![T::zero(); k];
    let mut d_d = vec![T::zero(); k];
    let mut d_o = vec![T::zero(); k];
    let slack = margin - cosine_similarity(&d.embedding, &s.embedding) + cosine_similarity(&d.embedding, &o.embedding);
    // A hinge exactly at zero counts as inactive.
    if slack > T::zero() {
        let scale = T::one() / b;
        cosine_backward(&d.embedding, &s.embedding, -scale, &mut d_d, &mut d_s);
        cosine_backward(&d.embedding, &o.embedding, scale, &mut d_d, &mut d_o);
    }
    let l1_coef = T::of(config.lambda_l1) / (b * T::of(3.0));
    backward_document(model, s, aspect, &d_s, l1_coef, grads);
    backward_document(model, d, aspect, &d_d, l1_coef, grads);
    backward_document(model, o, aspect, &d_o, l1_coef, grads);
}

fn add_l2<T: Scalar>(model: &AspectModel<T>, config: &TrainConfig, grads: &mut GradientSet<T>) {
    let two_lambda = T::of(2.0 * config.lambda_l2);
    if two_lambda.is_zero() {
        return;
    }
    for (g, p) in grads.tensors_mut().into_iter().zip(model.params.tensors()) {
        for (gv, &pv) in g.data_mut().iter_mut().zip(p.data()) {
            *gv += two_lambda * pv;
        }
    }
}

/// Gradient of the full objective given the batch's forward caches.
pub fn backward<T: Scalar>(model: &AspectModel<T>, fwd: &BatchForward<T>, config: &TrainConfig) -> Result<GradientSet<T>> {
    if fwd.items.is_empty() || fwd.items.len() != fwd.aspects.len() {
        return Err(Error::config("backward needs one forward cache per triplet"));
    }
    let mut grads = model.params.zeros_like();
    for (results, &aspect) in fwd.items.iter().zip(&fwd.aspects) {
        backward_triplet(model, results, aspect, config, fwd.items.len(), &mut grads);
    }
    add_l2(model, config, &mut grads);
    Ok(grads)
}

/// Objective and gradient for a batch. With `config.parallel` the per-triplet
/// work runs on the rayon pool and the summation order is unspecified.
pub fn objective_and_gradient<T: Scalar>(
    model: &AspectModel<T>,
    batch: &TripletBatch,
    config: &TrainConfig,
) -> Result<(Objective<T>, GradientSet<T>)> {
    if !config.parallel {
        let fwd = forward_batch(model, batch)?;
        let objective = objective_from_forward(model, &fwd, config);
        let grads = backward(model, &fwd, config)?;
        return Ok((objective, grads));
    }
    if batch.is_empty() {
        return Err(Error::config("triplet batch is empty"));
    }
    let n = batch.len();
    type Acc<T> = (GradientSet<T>, Vec<(usize, T)>, T);
    let zero = || -> Acc<T> { (model.params.zeros_like(), Vec::new(), T::zero()) };
    let merged = batch
        .items
        .par_iter()
        .enumerate()
        .try_fold(zero, |mut acc, (i, t)| -> Result<Acc<T>> {
            let results = forward_triplet(model, t)?;
            let [s, d, o] = &results;
            acc.1.push((i, triplet_hinge_loss(&s.embedding, &d.embedding, &o.embedding, T::of(config.margin))));
            acc.2 += results.iter().flat_map(|r| r.gates.iter().copied()).sum::<T>();
            backward_triplet(model, &results, t.aspect, config, n, &mut acc.0);
            Ok(acc)
        })
        .try_reduce(
            zero,
            |mut a, b| {
                a.0.add_assign(&b.0);
                a.1.extend(b.1);
                a.2 += b.2;
                Ok(a)
            },
        )?;
    let (mut grads, mut hinges, gate_sum) = merged;
    hinges.sort_by_key(|(i, _)| *i);
    let per_example: Vec<T> = hinges.into_iter().map(|(_, h)| h).collect();
    add_l2(model, config, &mut grads);
    let b = T::from_usize(n).expect("batch size fits");
    let hinge = per_example.iter().copied().sum::<T>() / b;
    let l2 = T::of(config.lambda_l2) * l2_penalty(&model.params);
    let l1 = T::of(config.lambda_l1) * gate_sum / (b * T::of(3.0));
    Ok((
        Objective {
            total: hinge + l2 + l1,
            hinge,
            l2,
            l1,
            per_example,
        },
        grads,
    ))
}
