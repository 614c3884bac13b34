use crate::scalar::Scalar;

/// Denominator guard for zero-norm vectors.
pub const COSINE_EPS: f64 = 1e-12;

fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).map(|(&a, &b)| a * b).sum()
}

fn norm<T: Scalar>(u: &[T]) -> T {
    dot(u, u).sqrt()
}

/// `u.v / (|u||v| + eps)`, clamped to `[-1, 1]`.
pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> T {
    debug_assert_eq!(u.len(), v.len());
    let c = dot(u, v) / (norm(u) * norm(v) + T::of(COSINE_EPS));
    c.max(-T::one()).min(T::one())
}

/// Gradients of the unclamped cosine w.r.t. both arguments, scaled by `upstream`.
/// At a zero vector the norm derivative term is taken as zero.
pub(crate) fn cosine_backward<T: Scalar>(u: &[T], v: &[T], upstream: T, du: &mut [T], dv: &mut [T]) {
    let p = dot(u, v);
    let (a, b) = (norm(u), norm(v));
    let denom = a * b + T::of(COSINE_EPS);
    let inv = upstream / denom;
    let coef = upstream * p / (denom * denom);
    let cu = if a.is_zero() { T::zero() } else { coef * b / a };
    let cv = if b.is_zero() { T::zero() } else { coef * a / b };
    for i in 0..u.len() {
        du[i] += inv * v[i] - cu * u[i];
        dv[i] += inv * u[i] - cv * v[i];
    }
}
