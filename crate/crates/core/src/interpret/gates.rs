use crate::error::{Error, Result};

/// Mean filter over the first `true_len` entries with truncated windows at
/// the edges. Positions past `true_len` come back as zeros.
pub fn smooth_gates(g: &[f64], true_len: usize, window: usize) -> Result<Vec<f64>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::config(format!("smoothing window must be odd and positive, got {window}")));
    }
    let len = true_len.min(g.len());
    let half = window / 2;
    let mut out = vec![0.0; g.len()];
    for (i, o) in out.iter_mut().enumerate().take(len) {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(len);
        let sum: f64 = g[lo..hi].iter().sum();
        *o = sum / (hi - lo) as f64;
    }
    Ok(out)
}

/// Min-max rescale of the first `true_len` entries to [0, 1]. A constant
/// prefix maps to zeros.
pub fn normalize_gates(g: &[f64], true_len: usize) -> Vec<f64> {
    let len = true_len.min(g.len());
    let mut out = vec![0.0; g.len()];
    let prefix = &g[..len];
    let min = prefix.iter().copied().fold(f64::INFINITY, f64::min);
    let max = prefix.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) || !(max - min).is_finite() {
        return out;
    }
    let range = max - min;
    for (o, &x) in out.iter_mut().zip(prefix) {
        *o = ((x - min) / range).clamp(0.0, 1.0);
    }
    out
}

/// Smooth then normalize, truncated to `true_len`.
pub fn highlight_intensities(g: &[f64], true_len: usize, window: usize) -> Result<Vec<f64>> {
    let len = true_len.min(g.len());
    let mut v = normalize_gates(&smooth_gates(g, len, window)?, len);
    v.truncate(len);
    Ok(v)
}
