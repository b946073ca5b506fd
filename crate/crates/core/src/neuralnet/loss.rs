use super::Scalar;

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `−log softmax(logits)[label]` and its gradient `softmax(logits) − onehot(label)`.
pub fn cross_entropy_loss<T: Scalar>(logits: &[T], label: usize) -> (T, Vec<T>) {
    assert!(label < logits.len(), "label {label} out of range");
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln() + max;
    let loss = log_sum - logits[label];
    let mut grad = softmax(logits);
    grad[label] = grad[label] - T::one();
    (loss, grad)
}

/// Squared TD error `½(q − y)²` and its gradient `q − y` clipped to [−1, 1].
pub fn td_loss(q: f64, target: f64) -> (f64, f64) {
    let diff = q - target;
    (0.5 * diff * diff, diff.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits() {
        let (loss, grad) = cross_entropy_loss(&[0.0f64, 0.0], 0);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![-0.5, 0.5]);
    }

    #[test]
    fn extreme_logits_do_not_overflow() {
        let (loss, grad) = cross_entropy_loss(&[1000.0f32, -1000.0], 0);
        assert!(loss.is_finite() && loss.abs() < 1e-6);
        assert!(grad.iter().all(|g| g.is_finite()));
        let (loss, _) = cross_entropy_loss(&[1000.0f64, -1000.0], 1);
        assert!((loss - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn td_fixtures() {
        assert_eq!(td_loss(0.3, 0.3), (0.0, 0.0));
        assert!((td_loss(0.55, 1.0).1 + 0.45).abs() < 1e-12);
        assert_eq!(td_loss(5.0, 0.0).1, 1.0);
        assert_eq!(td_loss(-5.0, 0.0), (12.5, -1.0));
    }

    proptest! {
        #[test]
        fn ce_gradient_sums_to_zero(logits in prop::collection::vec(-50.0f64..50.0, 2..6), label in 0usize..2) {
            let (loss, grad) = cross_entropy_loss(&logits, label);
            prop_assert!(loss >= 0.0);
            prop_assert!(grad.iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
