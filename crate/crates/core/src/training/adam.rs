use super::config::TrainConfig;
use crate::encoder::{from_named, to_named, AspectModel, EncoderConfig, GradientSet, OptimizerSnapshot, Parameters};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// First and second moment estimates, mirroring the parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: Parameters<T>,
    pub second_moment: Parameters<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &Parameters<T>) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
        }
    }

    pub fn snapshot(&self) -> OptimizerSnapshot<T> {
        OptimizerSnapshot {
            step: self.step,
            first_moment: to_named(&self.first_moment),
            second_moment: to_named(&self.second_moment),
        }
    }

    pub fn from_snapshot(config: &EncoderConfig, snap: &OptimizerSnapshot<T>) -> Result<Self> {
        Ok(Self {
            first_moment: from_named(config, &snap.first_moment)?,
            second_moment: from_named(config, &snap.second_moment)?,
            step: snap.step,
        })
    }
}

/// One bias-corrected Adam update. Leaves the pad embedding row untouched and
/// refuses non-finite gradients before modifying anything.
pub fn adam_step<T: Scalar>(
    model: &mut AspectModel<T>,
    grads: &GradientSet<T>,
    state: &mut AdamState<T>,
    config: &TrainConfig,
) -> Result<()> {
    for (name, g) in grads.named_tensors() {
        if !g.all_finite() {
            return Err(Error::NonFinite(format!("gradient of `{name}`")));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::of(config.beta1), T::of(config.beta2));
    let lr = T::of(config.learning_rate);
    let eps = T::of(config.adam_eps);
    let bc1 = T::one() - b1.powi(t);
    let bc2 = T::one() - b2.powi(t);

    let pad = model.pad_id as usize;
    let m_dim = model.config.embed_dim;
    let params = model.params.tensors_mut();
    let ms = state.first_moment.tensors_mut();
    let vs = state.second_moment.tensors_mut();
    for (idx, (((p, g), m), v)) in params.into_iter().zip(grads.tensors()).zip(ms).zip(vs).enumerate() {
        // Tensor 0 is the embedding table.
        let skip = if idx == 0 { pad * m_dim..(pad + 1) * m_dim } else { 0..0 };
        let (p, g, m, v) = (p.data_mut(), g.data(), m.data_mut(), v.data_mut());
        for i in 0..p.len() {
            if skip.contains(&i) {
                continue;
            }
            m[i] = b1 * m[i] + (T::one() - b1) * g[i];
            v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
