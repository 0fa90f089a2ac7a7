use crate::error::{Error, Result};
use crate::tensor::Vector;

/// Softmax probabilities, computed with max-subtraction.
pub fn softmax(logits: &Vector) -> Vector {
    let max = logits
        .values()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.values().iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Vector::from_raw(exps.into_iter().map(|e| e / sum).collect())
}

/// Cross-entropy of `softmax(logits)` against `label`, and its gradient with
/// respect to the logits (`softmax - onehot`).
pub fn softmax_xent(logits: &Vector, label: usize) -> Result<(f64, Vector)> {
    if label >= logits.dim() {
        return Err(Error::InvalidArgument(format!(
            "label {label} out of range for {} classes",
            logits.dim()
        )));
    }
    if !logits.all_finite() {
        return Err(Error::NonFinite("logits".into()));
    }
    let max = logits
        .values()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.values().iter().map(|z| (z - max).exp()).sum();
    let log_sum = sum.ln();
    let loss = log_sum - (logits.get(label) - max);
    let mut grad = softmax(logits);
    grad.values_mut()[label] -= 1.0;
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f64]) -> Vector {
        Vector::from_vec(values.to_vec()).unwrap()
    }

    #[test]
    fn uniform_logits_give_ln_k() {
        let (loss, grad) = softmax_xent(&v(&[0.3; 4]), 1).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
        assert_eq!(grad.values(), &[0.25, -0.75, 0.25, 0.25]);
    }

    #[test]
    fn saturated_logits() {
        let (loss, grad) = softmax_xent(&v(&[0.0, 1000.0, 0.0]), 1).unwrap();
        assert!(loss.abs() < 1e-300);
        assert!(grad.values().iter().all(|g| g.abs() < 1e-300));
    }

    #[test]
    fn hand_evaluated_value() {
        // -ln(e^3 / (e + e^2 + e^3))
        let expected = (1f64.exp() + 2f64.exp() + 3f64.exp()).ln() - 3.0;
        let (loss, _) = softmax_xent(&v(&[1.0, 2.0, 3.0]), 2).unwrap();
        assert!((loss - expected).abs() < 1e-14);
        assert!((loss - 0.40761).abs() < 1e-5);
    }

    #[test]
    fn label_out_of_range() {
        assert!(softmax_xent(&v(&[1.0, 2.0]), 2).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let logits = [0.3, -1.2, 2.0, 0.1];
        let (_, grad) = softmax_xent(&v(&logits), 2).unwrap();
        let eps = 1e-6;
        for i in 0..logits.len() {
            let mut hi = logits;
            let mut lo = logits;
            hi[i] += eps;
            lo[i] -= eps;
            let fd = (softmax_xent(&v(&hi), 2).unwrap().0 - softmax_xent(&v(&lo), 2).unwrap().0)
                / (2.0 * eps);
            assert!((fd - grad.get(i)).abs() < 1e-8);
        }
    }
}
