//! Length-preserving 1-d convolution over token positions with PReLU.

use super::params::ConvLayer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// `out[t] = bias + sum_j x[t + j - h] . kernel[j]` with rows outside `[0, N)` read as zero.
pub fn conv_pre_activation<T: Scalar>(x: &Tensor<T>, kernel: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (window, input, filters) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]);
    if x.row_len() != input {
        return Err(Error::DimensionMismatch(format!(
            "conv input has {} columns, kernel expects {input}",
            x.row_len()
        )));
    }
    if window % 2 == 0 {
        return Err(Error::config("conv window must be odd"));
    }
    let n = x.rows();
    let half = (window - 1) / 2;
    let k = kernel.data();
    let mut out = Tensor::zeros(&[n, filters]);
    for t in 0..n {
        let row = out.row_mut(t);
        row.copy_from_slice(bias.data());
        for j in 0..window {
            let src = t + j;
            if src < half || src - half >= n {
                continue;
            }
            let xr = x.row(src - half);
            for (i, &xv) in xr.iter().enumerate() {
                if xv.is_zero() {
                    continue;
                }
                let krow = &k[(j * input + i) * filters..(j * input + i + 1) * filters];
                for (o, &kv) in row.iter_mut().zip(krow) {
                    *o += xv * kv;
                }
            }
        }
    }
    Ok(out)
}

/// Channel-wise PReLU: `x` if positive, else `alpha[c] * x`.
pub fn prelu<T: Scalar>(pre: &Tensor<T>, alpha: &Tensor<T>) -> Tensor<T> {
    let mut out = pre.clone();
    let a = alpha.data();
    let w = pre.row_len();
    for t in 0..pre.rows() {
        for (c, v) in out.row_mut(t).iter_mut().enumerate().take(w) {
            if *v <= T::zero() {
                *v = a[c] * *v;
            }
        }
    }
    out
}

/// Full layer: convolution followed by PReLU.
pub fn conv_layer_forward<T: Scalar>(x: &Tensor<T>, layer: &ConvLayer<T>) -> Result<Tensor<T>> {
    let pre = conv_pre_activation(x, &layer.kernel, &layer.bias)?;
    Ok(prelu(&pre, &layer.prelu_alpha))
}

/// Gradient through PReLU. Returns d(pre) and accumulates d(alpha).
pub(crate) fn prelu_backward<T: Scalar>(pre: &Tensor<T>, alpha: &Tensor<T>, d_out: &Tensor<T>, d_alpha: &mut Tensor<T>) -> Tensor<T> {
    let mut d_pre = d_out.clone();
    let a = alpha.data();
    let da = d_alpha.data_mut();
    for t in 0..pre.rows() {
        let p = pre.row(t);
        for (c, g) in d_pre.row_mut(t).iter_mut().enumerate() {
            if p[c] <= T::zero() {
                da[c] += *g * p[c];
                *g = a[c] * *g;
            }
        }
    }
    d_pre
}

/// Gradient through the convolution. Accumulates kernel and bias gradients;
/// returns the input gradient when `want_input` is set.
pub(crate) fn conv_backward<T: Scalar>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    d_pre: &Tensor<T>,
    d_kernel: &mut Tensor<T>,
    d_bias: &mut Tensor<T>,
    want_input: bool,
) -> Option<Tensor<T>> {
    let (window, input, filters) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]);
    let n = x.rows();
    let half = (window - 1) / 2;
    let k = kernel.data();
    let mut d_x = want_input.then(|| Tensor::zeros(&[n, input]));

    for t in 0..n {
        let g = d_pre.row(t);
        for (b, &gv) in d_bias.data_mut().iter_mut().zip(g) {
            *b += gv;
        }
    }
    let dk = d_kernel.data_mut();
    for t in 0..n {
        let g = d_pre.row(t);
        for j in 0..window {
            let src = t + j;
            if src < half || src - half >= n {
                continue;
            }
            let s = src - half;
            let xr = x.row(s);
            for (i, &xv) in xr.iter().enumerate() {
                let off = (j * input + i) * filters;
                if !xv.is_zero() {
                    for (d, &gv) in dk[off..off + filters].iter_mut().zip(g) {
                        *d += xv * gv;
                    }
                }
                if let Some(dx) = d_x.as_mut() {
                    let acc: T = k[off..off + filters].iter().zip(g).map(|(&kv, &gv)| kv * gv).sum();
                    dx.row_mut(s)[i] += acc;
                }
            }
        }
    }
    d_x
}
