use super::Tensor;
use crate::error::{Error, Result};

/// Numerically stable softmax of one row (max subtracted before `exp`).
pub fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn softmax_rows(logits: &Tensor) -> Result<Tensor> {
    logits.expect_rank(2, "softmax")?;
    let c = logits.shape[1];
    let data = logits.data.chunks(c).flat_map(softmax).collect();
    Tensor::new(logits.shape.clone(), data)
}

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits, `(p - onehot) / B`.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let probs = softmax_rows(logits)?;
    let (b, c) = (logits.shape[0], logits.shape[1]);
    if labels.len() != b {
        return Err(Error::shape(format!("{} labels for a batch of {b}", labels.len())));
    }
    let mut grad = probs.data.clone();
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= c {
            return Err(Error::InvalidArgument(format!("label {y} out of range for {c} classes")));
        }
        loss -= probs.data[i * c + y].max(f64::MIN_POSITIVE).ln();
        grad[i * c + y] -= 1.0;
    }
    grad.iter_mut().for_each(|g| *g /= b as f64);
    Ok((loss / b as f64, Tensor::new(logits.shape.clone(), grad)?))
}

/// Mean squared error over all elements and its gradient.
pub fn mse(pred: &Tensor, target: &[f64]) -> Result<(f64, Tensor)> {
    if pred.len() != target.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} targets",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len().max(1) as f64;
    let diff: Vec<f64> = pred.data.iter().zip(target).map(|(p, t)| p - t).collect();
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let grad = diff.iter().map(|d| 2.0 * d / n).collect();
    Ok((loss, Tensor::new(pred.shape.clone(), grad)?))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}
