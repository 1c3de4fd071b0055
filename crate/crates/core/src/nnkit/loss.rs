use crate::error::{Error, Result};

use super::{Real, Tensor4};

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits, `(softmax - onehot) / N`. Logits have dims `(N, C, 1, 1)`.
pub fn softmax_xent<T: Real>(logits: &Tensor4<T>, labels: &[usize]) -> Result<(T, Tensor4<T>)> {
    let n = logits.batch();
    let classes = logits.item_len();
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels for {} logits rows", labels.len(), n)));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes.min(2)) {
        return Err(Error::InvalidLabel(bad));
    }
    let scale = T::one() / T::lit(n as f64);
    let mut grad = Tensor4::zeros(logits.dims());
    let mut total = T::zero();
    for (i, &label) in labels.iter().enumerate() {
        let z = logits.item(i);
        let shift = z.iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = z.iter().map(|&v| (v - shift).exp()).sum();
        let log_sum = sum.ln() + shift;
        total += log_sum - z[label];
        for (j, g) in grad.item_mut(i).iter_mut().enumerate() {
            let p = (z[j] - log_sum).exp();
            let target = if j == label { T::one() } else { T::zero() };
            *g = (p - target) * scale;
        }
    }
    let loss = total * scale;
    if !loss.is_finite() {
        return Err(Error::NumericFault("softmax cross-entropy"));
    }
    Ok((loss, grad))
}

/// Arg-max class per row; ties go to the lower index.
pub fn predict<T: Real>(logits: &Tensor4<T>) -> Vec<usize> {
    (0..logits.batch())
        .map(|i| {
            let z = logits.item(i);
            let mut best = 0;
            for (j, &v) in z.iter().enumerate() {
                if v > z[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
