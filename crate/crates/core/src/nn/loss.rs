use crate::error::{shape_err, Result};

use super::{Batch, Scalar, Tensor2};

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

fn softmax_in_place<T: Scalar>(col: &mut [T]) {
    let max = col.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in col.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in col.iter_mut() {
        *v /= sum;
    }
}

/// Column-wise softmax with max subtraction.
pub fn softmax_columns<T: Scalar>(x: &Tensor2<T>) -> Tensor2<T> {
    let mut out = x.clone();
    let (channels, length) = (x.channels(), x.length());
    let mut col = vec![T::zero(); channels];
    for l in 0..length {
        for (c, v) in col.iter_mut().enumerate() {
            *v = x.get(c, l);
        }
        softmax_in_place(&mut col);
        for (c, &v) in col.iter().enumerate() {
            out.set(c, l, v);
        }
    }
    out
}

/// Column-wise softmax over every column of a batch.
pub fn softmax_batch<T: Scalar>(x: &Batch<T>) -> Batch<T> {
    let (channels, n) = (x.channels(), x.cols());
    let mut out = x.clone();
    let data = out.data_mut();
    let mut max = vec![T::neg_infinity(); n];
    for c in 0..channels {
        for (m, &v) in max.iter_mut().zip(&data[c * n..(c + 1) * n]) {
            *m = m.max(v);
        }
    }
    let mut sum = vec![T::zero(); n];
    for c in 0..channels {
        for ((v, &m), s) in data[c * n..(c + 1) * n].iter_mut().zip(&max).zip(sum.iter_mut()) {
            *v = (*v - m).exp();
            *s += *v;
        }
    }
    for c in 0..channels {
        for (v, &s) in data[c * n..(c + 1) * n].iter_mut().zip(&sum) {
            *v /= s;
        }
    }
    out
}

/// Mean over columns of `-Σ target · ln(max(pred, 1e-12))`.
pub fn cross_entropy_columns<T: Scalar>(pred: &Tensor2<T>, target: &Tensor2<T>) -> Result<T> {
    if pred.channels() != target.channels() || pred.length() != target.length() {
        return Err(shape_err(
            format!("{}x{}", target.channels(), target.length()),
            format!("{}x{}", pred.channels(), pred.length()),
        ));
    }
    Ok(cross_entropy(pred.values(), target.values(), pred.length()))
}

fn cross_entropy<T: Scalar>(pred: &[T], target: &[T], columns: usize) -> T {
    let floor = T::lit(PROB_FLOOR);
    let total: T = pred
        .iter()
        .zip(target)
        .filter(|(_, &t)| t != T::zero())
        .map(|(&p, &t)| -t * p.max(floor).ln())
        .sum();
    total / T::from_usize(columns).unwrap()
}

/// Softmax plus cross-entropy over a batch of logits. Returns the probabilities,
/// the mean loss over all columns, and the loss gradient w.r.t. the logits,
/// `(p - t) / columns` (exact when targets are distributions).
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Batch<T>,
    target: &Batch<T>,
) -> Result<(Batch<T>, T, Batch<T>)> {
    logits.same_shape(target)?;
    let probs = softmax_batch(logits);
    let n = logits.cols();
    let loss = cross_entropy(probs.data(), target.data(), n);
    let scale = T::one() / T::from_usize(n).unwrap();
    let mut grad = probs.clone();
    for (g, &t) in grad.data_mut().iter_mut().zip(target.data()) {
        *g = (*g - t) * scale;
    }
    Ok((probs, loss, grad))
}
