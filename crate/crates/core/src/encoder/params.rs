use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::config::EncoderConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const PRELU_INIT: f64 = 0.25;
pub const EMBEDDING_INIT_BOUND: f64 = 0.05;

/// One convolution with channel-wise PReLU activation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    /// Shape `[window, in, filters]`.
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
    pub prelu_alpha: Tensor<T>,
}

/// Sigmoid gate over the final representation: `g = sigmoid(H w + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateHead<T> {
    pub weight: Tensor<T>,
    /// Shape `[1]`.
    pub bias: Tensor<T>,
}

/// Parameters owned by a single aspect: conv layers `2..=L` and the gate.
#[derive(Debug, Clone, PartialEq)]
pub struct AspectEncoder<T> {
    pub convs: Vec<ConvLayer<T>>,
    pub gate: GateHead<T>,
}

/// Every learnable tensor. Also used as the container for gradients and
/// optimizer moments, which mirror the parameter shapes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters<T> {
    /// `[vocab, embed_dim]`, shared by all aspects.
    pub embedding: Tensor<T>,
    /// First conv layer, shared by all aspects.
    pub conv1: ConvLayer<T>,
    pub aspects: Vec<AspectEncoder<T>>,
}

pub type GradientSet<T> = Parameters<T>;

impl<T: Scalar> ConvLayer<T> {
    pub fn zeros(window: usize, input: usize, filters: usize) -> Self {
        Self {
            kernel: Tensor::zeros(&[window, input, filters]),
            bias: Tensor::zeros(&[filters]),
            prelu_alpha: Tensor::zeros(&[filters]),
        }
    }

    pub fn window(&self) -> usize {
        self.kernel.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.kernel.shape()[1]
    }

    pub fn filters(&self) -> usize {
        self.kernel.shape()[2]
    }
}

impl<T: Scalar> Parameters<T> {
    pub fn zeros(config: &EncoderConfig, vocab_size: usize) -> Self {
        let k = config.filters;
        let f = config.window;
        Self {
            embedding: Tensor::zeros(&[vocab_size, config.embed_dim]),
            conv1: ConvLayer::zeros(f, config.embed_dim, k),
            aspects: (0..config.n_aspects)
                .map(|_| AspectEncoder {
                    convs: (1..config.layers).map(|_| ConvLayer::zeros(f, k, k)).collect(),
                    gate: GateHead {
                        weight: Tensor::zeros(&[k]),
                        bias: Tensor::zeros(&[1]),
                    },
                })
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(T::zero()));
        z
    }

    /// Tensors in canonical order with stable names.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = vec![
            ("embedding".to_owned(), &self.embedding),
            ("conv1.kernel".to_owned(), &self.conv1.kernel),
            ("conv1.bias".to_owned(), &self.conv1.bias),
            ("conv1.prelu_alpha".to_owned(), &self.conv1.prelu_alpha),
        ];
        for (a, enc) in self.aspects.iter().enumerate() {
            for (i, c) in enc.convs.iter().enumerate() {
                let l = i + 2;
                out.push((format!("aspect{a}.conv{l}.kernel"), &c.kernel));
                out.push((format!("aspect{a}.conv{l}.bias"), &c.bias));
                out.push((format!("aspect{a}.conv{l}.prelu_alpha"), &c.prelu_alpha));
            }
            out.push((format!("aspect{a}.gate.weight"), &enc.gate.weight));
            out.push((format!("aspect{a}.gate.bias"), &enc.gate.bias));
        }
        out
    }

    /// Same order as [`Parameters::named_tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let Parameters {
            embedding,
            conv1,
            aspects,
        } = self;
        let mut out = vec![embedding, &mut conv1.kernel, &mut conv1.bias, &mut conv1.prelu_alpha];
        for enc in aspects {
            let AspectEncoder { convs, gate } = enc;
            for c in convs {
                out.push(&mut c.kernel);
                out.push(&mut c.bias);
                out.push(&mut c.prelu_alpha);
            }
            out.push(&mut gate.weight);
            out.push(&mut gate.bias);
        }
        out
    }

    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        self.named_tensors().into_iter().map(|(_, t)| t).collect()
    }

    pub fn add_assign(&mut self, other: &Parameters<T>) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.all_finite())
    }

    pub fn n_values(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Largest absolute entry; handy for test diagnostics.
    pub fn max_abs(&self) -> T {
        self.tensors()
            .iter()
            .flat_map(|t| t.data().iter())
            .fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

/// Learnable parameters together with the architecture they instantiate.
#[derive(Debug, Clone, PartialEq)]
pub struct AspectModel<T> {
    pub config: EncoderConfig,
    pub pad_id: u32,
    pub params: Parameters<T>,
}

impl<T: Scalar> AspectModel<T> {
    pub fn vocab_size(&self) -> usize {
        self.params.embedding.rows()
    }

    pub fn n_aspects(&self) -> usize {
        self.params.aspects.len()
    }

    /// Checks tensor shapes against the config and that the pad row is zero.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let expected = Parameters::<T>::zeros(&self.config, self.vocab_size());
        for ((name, got), want) in self.params.named_tensors().into_iter().zip(expected.tensors()) {
            if got.shape() != want.shape() {
                return Err(Error::DimensionMismatch(format!(
                    "{name}: shape {:?}, expected {:?}",
                    got.shape(),
                    want.shape()
                )));
            }
        }
        if self.params.named_tensors().len() != expected.tensors().len() {
            return Err(Error::DimensionMismatch("parameter count does not match config".into()));
        }
        if (self.pad_id as usize) >= self.vocab_size() {
            return Err(Error::config("pad id outside vocabulary"));
        }
        if self.params.embedding.row(self.pad_id as usize).iter().any(|x| !x.is_zero()) {
            return Err(Error::config("pad embedding row must be zero"));
        }
        Ok(())
    }
}

fn uniform<T: Scalar>(rng: &mut ChaCha8Rng, shape: &[usize], bound: f64) -> Tensor<T> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::of(rng.gen_range(-bound..=bound))).collect();
    Tensor::from_vec(shape, data)
}

/// Glorot bound `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Bound used for a conv kernel of shape `[window, in, filters]`.
pub fn conv_init_bound(window: usize, input: usize, filters: usize) -> f64 {
    glorot_bound(window * input, window * filters)
}

fn init_conv<T: Scalar>(rng: &mut ChaCha8Rng, window: usize, input: usize, filters: usize) -> ConvLayer<T> {
    ConvLayer {
        kernel: uniform(rng, &[window, input, filters], conv_init_bound(window, input, filters)),
        bias: Tensor::zeros(&[filters]),
        prelu_alpha: Tensor::filled(&[filters], T::of(PRELU_INIT)),
    }
}

/// Fresh model: Glorot-uniform kernels and gate weights, uniform(+-0.05)
/// embeddings with a zero pad row, zero biases, PReLU slopes at 0.25.
pub fn init_model<T: Scalar>(config: &EncoderConfig, vocab_size: usize, pad_id: u32, seed: u64) -> Result<AspectModel<T>> {
    config.validate()?;
    if vocab_size < 2 {
        return Err(Error::config("vocabulary needs at least the pad and unk entries"));
    }
    if pad_id as usize >= vocab_size {
        return Err(Error::config("pad id outside vocabulary"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, k, f) = (config.embed_dim, config.filters, config.window);

    let mut embedding = uniform(&mut rng, &[vocab_size, m], EMBEDDING_INIT_BOUND);
    embedding.row_mut(pad_id as usize).fill(T::zero());
    let conv1 = init_conv(&mut rng, f, m, k);
    let aspects = (0..config.n_aspects)
        .map(|_| {
            let convs = (1..config.layers).map(|_| init_conv(&mut rng, f, k, k)).collect();
            let gate = GateHead {
                weight: uniform(&mut rng, &[k], glorot_bound(k, 1)),
                bias: Tensor::zeros(&[1]),
            };
            AspectEncoder { convs, gate }
        })
        .collect();
    Ok(AspectModel {
        config: config.clone(),
        pad_id,
        params: Parameters {
            embedding,
            conv1,
            aspects,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EncoderConfig {
        EncoderConfig {
            seq_len: 6,
            embed_dim: 4,
            filters: 3,
            window: 3,
            layers: 3,
            n_aspects: 2,
            lambda_l2: 0.0,
            lambda_l1: 0.0,
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a: AspectModel<f64> = init_model(&small(), 10, 0, 5).unwrap();
        let b: AspectModel<f64> = init_model(&small(), 10, 0, 5).unwrap();
        assert_eq!(a, b);
        let c: AspectModel<f64> = init_model(&small(), 10, 0, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn even_window_and_tiny_vocab_rejected() {
        let mut cfg = small();
        cfg.window = 4;
        assert!(init_model::<f64>(&cfg, 10, 0, 1).is_err());
        assert!(init_model::<f64>(&small(), 1, 0, 1).is_err());
    }

    #[test]
    fn kernels_respect_glorot_bound() {
        let cfg = small();
        let m: AspectModel<f64> = init_model(&cfg, 10, 0, 3).unwrap();
        let b1 = (6.0f64 / (3.0 * 4.0 + 3.0 * 3.0)).sqrt();
        assert!((conv_init_bound(3, 4, 3) - b1).abs() < 1e-15);
        assert!(m.params.conv1.kernel.data().iter().all(|x| x.abs() <= b1));
        let b2 = (6.0f64 / (3.0 * 3.0 + 3.0 * 3.0)).sqrt();
        for enc in &m.params.aspects {
            for c in &enc.convs {
                assert!(c.kernel.data().iter().all(|x| x.abs() <= b2));
                assert!(c.bias.data().iter().all(|&x| x == 0.0));
                assert!(c.prelu_alpha.data().iter().all(|&x| x == 0.25));
            }
            assert!(enc.gate.weight.data().iter().all(|x| x.abs() <= (6.0f64 / 4.0).sqrt()));
        }
        assert!(m.params.embedding.data().iter().all(|x| x.abs() <= 0.05));
    }

    #[test]
    fn sharing_structure_and_pad_row() {
        let m: AspectModel<f64> = init_model(&small(), 10, 0, 3).unwrap();
        assert_eq!(m.params.aspects.len(), 2);
        assert_eq!(m.params.aspects[0].convs.len(), 2);
        let shapes = |a: &AspectEncoder<f64>| {
            a.convs.iter().map(|c| c.kernel.shape().to_vec()).collect::<Vec<_>>()
        };
        assert_eq!(shapes(&m.params.aspects[0]), shapes(&m.params.aspects[1]));
        assert!(m.params.embedding.row(0).iter().all(|&x| x == 0.0));
        m.validate().unwrap();
        let names: Vec<String> = m.params.named_tensors().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), 4 + 2 * (2 * 3 + 2));
        assert_eq!(names[4], "aspect0.conv2.kernel");
    }

    #[test]
    fn f32_models_initialize_too() {
        let m: AspectModel<f32> = init_model(&small(), 10, 0, 3).unwrap();
        m.validate().unwrap();
    }
}
