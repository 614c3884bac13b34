use super::conv::{conv_pre_activation, prelu};
use super::params::AspectModel;
use crate::corpus::EncodedDocument;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub ids: Vec<u32>,
    pub true_len: usize,
    /// Input of each conv layer: the embedded words for layer 1, then the
    /// running sum `H_1 + .. + H_{l-1}` for layer `l`.
    pub inputs: Vec<Tensor<T>>,
    /// Pre-activation of each conv layer.
    pub pre: Vec<Tensor<T>>,
    /// Activated output `H_l` of each conv layer.
    pub outputs: Vec<Tensor<T>>,
    /// `H_1 + .. + H_L`, the representation that is gated and pooled.
    pub summed: Tensor<T>,
    /// Gate logits for unmasked positions.
    pub logits: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct ForwardResult<T> {
    pub embedding: Vec<T>,
    /// One gate per position; padded positions are exactly zero.
    pub gates: Vec<T>,
    pub cache: ForwardCache<T>,
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `sum_t gates[t] * summed[t]`.
pub fn pool_with_gates<T: Scalar>(summed: &Tensor<T>, gates: &[T]) -> Vec<T> {
    let mut e = vec![T::zero(); summed.row_len()];
    for (t, &g) in gates.iter().enumerate() {
        if g.is_zero() {
            continue;
        }
        for (o, &h) in e.iter_mut().zip(summed.row(t)) {
            *o += g * h;
        }
    }
    e
}

impl<T: Scalar> AspectModel<T> {
    fn embed_ids(&self, doc: &EncodedDocument) -> Result<Tensor<T>> {
        if doc.ids.len() != self.config.seq_len {
            return Err(Error::DimensionMismatch(format!(
                "document `{}` has length {}, encoder expects {}",
                doc.doc_id,
                doc.ids.len(),
                self.config.seq_len
            )));
        }
        let m = self.config.embed_dim;
        let mut e = Tensor::zeros(&[doc.ids.len(), m]);
        for (t, &id) in doc.ids.iter().enumerate() {
            if id as usize >= self.vocab_size() {
                return Err(Error::DimensionMismatch(format!("token id {id} outside vocabulary")));
            }
            e.row_mut(t).copy_from_slice(self.params.embedding.row(id as usize));
        }
        Ok(e)
    }

    /// Output `H_1` of the shared first layer.
    pub fn shared_features(&self, doc: &EncodedDocument) -> Result<Tensor<T>> {
        let e = self.embed_ids(doc)?;
        let c = &self.params.conv1;
        Ok(prelu(&conv_pre_activation(&e, &c.kernel, &c.bias)?, &c.prelu_alpha))
    }

    /// Gated convolutional encoding of `doc` for one aspect.
    pub fn forward_aspect(&self, doc: &EncodedDocument, aspect: usize) -> Result<ForwardResult<T>> {
        let enc = self.params.aspects.get(aspect).ok_or_else(|| {
            Error::config(format!("aspect index {aspect} out of range ({} aspects)", self.n_aspects()))
        })?;
        let true_len = doc.true_len.min(doc.ids.len());
        let embedded = self.embed_ids(doc)?;

        let layers = std::iter::once(&self.params.conv1).chain(enc.convs.iter());
        let mut inputs = Vec::with_capacity(self.config.layers);
        let mut pre = Vec::with_capacity(self.config.layers);
        let mut outputs = Vec::with_capacity(self.config.layers);
        let mut summed: Option<Tensor<T>> = None;
        let mut x = embedded;
        for layer in layers {
            let p = conv_pre_activation(&x, &layer.kernel, &layer.bias)?;
            let h = prelu(&p, &layer.prelu_alpha);
            let next = match summed.take() {
                None => h.clone(),
                Some(mut s) => {
                    s.add_assign(&h);
                    s
                }
            };
            inputs.push(std::mem::replace(&mut x, next.clone()));
            pre.push(p);
            outputs.push(h);
            summed = Some(next);
        }
        let summed = summed.expect("at least one layer");

        let w = enc.gate.weight.data();
        let b = enc.gate.bias.data()[0];
        let mut gates = vec![T::zero(); doc.ids.len()];
        let mut logits = Vec::with_capacity(true_len);
        for (t, g) in gates.iter_mut().enumerate().take(true_len) {
            let z = summed.row(t).iter().zip(w).map(|(&h, &wv)| h * wv).sum::<T>() + b;
            logits.push(z);
            *g = sigmoid(z);
        }
        let embedding = pool_with_gates(&summed, &gates);
        Ok(ForwardResult {
            embedding,
            gates,
            cache: ForwardCache {
                ids: doc.ids.clone(),
                true_len,
                inputs,
                pre,
                outputs,
                summed,
                logits,
            },
        })
    }

    /// Aspect embedding of `doc` without keeping the cache.
    pub fn embed(&self, doc: &EncodedDocument, aspect: usize) -> Result<Vec<T>> {
        Ok(self.forward_aspect(doc, aspect)?.embedding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{init_model, AspectEncoder, ConvLayer, EncoderConfig, GateHead, Parameters};
    use proptest::prelude::*;

    fn cfg(seq_len: usize, layers: usize) -> EncoderConfig {
        EncoderConfig {
            seq_len,
            embed_dim: 4,
            filters: 3,
            window: 3,
            layers,
            n_aspects: 2,
            lambda_l2: 0.0,
            lambda_l1: 0.0,
        }
    }

    fn doc(ids: Vec<u32>, true_len: usize) -> EncodedDocument {
        EncodedDocument {
            doc_id: "d".into(),
            ids,
            true_len,
            group_id: None,
            labels: vec![],
        }
    }

    #[test]
    fn all_pad_document_has_zero_gates_and_embedding() {
        let m: AspectModel<f64> = init_model(&cfg(5, 2), 8, 0, 1).unwrap();
        let r = m.forward_aspect(&doc(vec![0; 5], 0), 0).unwrap();
        assert!(r.gates.iter().all(|&g| g == 0.0));
        assert!(r.embedding.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn scalar_model_matches_hand_arithmetic() {
        let config = EncoderConfig {
            seq_len: 1,
            embed_dim: 1,
            filters: 1,
            window: 1,
            layers: 1,
            n_aspects: 1,
            lambda_l2: 0.0,
            lambda_l1: 0.0,
        };
        let (x, kern, bias, w, bg) = (0.8, -1.5, 0.2, 0.7, -0.1);
        let model = AspectModel {
            config,
            pad_id: 0,
            params: Parameters {
                embedding: Tensor::from_vec(&[2, 1], vec![0.0, x]),
                conv1: ConvLayer {
                    kernel: Tensor::from_vec(&[1, 1, 1], vec![kern]),
                    bias: Tensor::from_vec(&[1], vec![bias]),
                    prelu_alpha: Tensor::from_vec(&[1], vec![0.25]),
                },
                aspects: vec![AspectEncoder {
                    convs: vec![],
                    gate: GateHead {
                        weight: Tensor::from_vec(&[1], vec![w]),
                        bias: Tensor::from_vec(&[1], vec![bg]),
                    },
                }],
            },
        };
        let r = model.forward_aspect(&doc(vec![1], 1), 0).unwrap();
        let pre: f64 = x * kern + bias; // -1.0
        let h = 0.25 * pre;
        let g = 1.0 / (1.0 + (-(w * h + bg)).exp());
        assert!((r.gates[0] - g).abs() < 1e-15);
        assert!((r.embedding[0] - g * h).abs() < 1e-15);
    }

    #[test]
    fn aspects_share_first_layer_but_not_gates() {
        let m: AspectModel<f64> = init_model(&cfg(6, 3), 8, 0, 4).unwrap();
        let d = doc(vec![2, 3, 4, 5, 0, 0], 4);
        let a = m.forward_aspect(&d, 0).unwrap();
        let b = m.forward_aspect(&d, 1).unwrap();
        assert_eq!(a.cache.outputs[0], b.cache.outputs[0]);
        assert_eq!(a.cache.outputs[0], m.shared_features(&d).unwrap());
        assert_ne!(a.cache.outputs[1], b.cache.outputs[1]);
        assert_ne!(a.gates, b.gates);
    }

    #[test]
    fn dense_residual_wiring() {
        let m: AspectModel<f64> = init_model(&cfg(6, 3), 8, 0, 4).unwrap();
        let d = doc(vec![2, 3, 4, 5, 6, 7], 6);
        let r = m.forward_aspect(&d, 1).unwrap();
        let c = &r.cache;
        let mut s12 = c.outputs[0].clone();
        s12.add_assign(&c.outputs[1]);
        assert_eq!(c.inputs[1], c.outputs[0]);
        assert_eq!(c.inputs[2], s12);
        let mut all = s12;
        all.add_assign(&c.outputs[2]);
        assert_eq!(c.summed, all);
    }

    #[test]
    fn wrong_length_and_bad_aspect_are_errors() {
        let m: AspectModel<f64> = init_model(&cfg(4, 2), 8, 0, 4).unwrap();
        assert!(m.forward_aspect(&doc(vec![1, 2, 3], 3), 0).is_err());
        assert!(m.forward_aspect(&doc(vec![1, 2, 3, 4], 4), 2).is_err());
    }

    #[test]
    fn swapping_aspect_blocks_swaps_outputs() {
        let m: AspectModel<f64> = init_model(&cfg(5, 2), 8, 0, 7).unwrap();
        let mut swapped = m.clone();
        swapped.params.aspects.swap(0, 1);
        let d = doc(vec![3, 1, 4, 1, 5], 5);
        assert_eq!(m.embed(&d, 0).unwrap(), swapped.embed(&d, 1).unwrap());
        assert_eq!(m.embed(&d, 1).unwrap(), swapped.embed(&d, 0).unwrap());
    }

    proptest! {
        #[test]
        fn gates_in_range_and_masked(ids in prop::collection::vec(1u32..8, 0..7), seed in 0u64..50, layers in 1usize..4) {
            let n = 7;
            let true_len = ids.len();
            let mut padded = ids.clone();
            padded.resize(n, 0);
            let m: AspectModel<f64> = init_model(&cfg(n, layers), 8, 0, seed).unwrap();
            let r = m.forward_aspect(&doc(padded, true_len), 0).unwrap();
            prop_assert_eq!(r.gates.len(), n);
            for (t, &g) in r.gates.iter().enumerate() {
                if t < true_len { prop_assert!(g > 0.0 && g < 1.0); } else { prop_assert_eq!(g, 0.0); }
            }
            prop_assert!(r.embedding.iter().all(|e| e.is_finite()));
            let mut doubled = r.cache.summed.clone();
            doubled.data_mut().iter_mut().for_each(|v| *v *= 2.0);
            let e2 = pool_with_gates(&doubled, &r.gates);
            for (a, b) in e2.iter().zip(&r.embedding) {
                prop_assert!((a - 2.0 * b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
            let again = m.forward_aspect(&doc(r.cache.ids.clone(), true_len), 0).unwrap();
            prop_assert_eq!(again.embedding, r.embedding);
        }
    }
}
