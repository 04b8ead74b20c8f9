//! Differentiable primitives with hand-written backward passes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DenseArray, NumericError};

/// Clamp applied to probabilities before taking logarithms.
pub const LOG_CLAMP: f64 = 1e-12;

/// Non-negative mean binary cross-entropy.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LossValue(f64);

impl LossValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `input[n×d_in] · weight[d_in×d_out] + bias[d_out]`.
pub fn affine(input: &DenseArray, weight: &DenseArray, bias: &DenseArray) -> Result<DenseArray, NumericError> {
    let (n, d_in, d_out) = affine_dims(input, weight, bias)?;
    let mut out = DenseArray::zeros(&[n, d_out]);
    for i in 0..n {
        let x = input.row(i);
        let y = out.row_mut(i);
        y.copy_from_slice(bias.data());
        for (k, &xk) in x.iter().enumerate().take(d_in) {
            if xk == 0.0 {
                continue;
            }
            let w = weight.row(k);
            for (yj, wj) in y.iter_mut().zip(w) {
                *yj += xk * wj;
            }
        }
    }
    Ok(out)
}

/// Gradients of [`affine`] with respect to input, weight and bias.
pub fn affine_backward(
    input: &DenseArray,
    weight: &DenseArray,
    grad_out: &DenseArray,
) -> Result<(DenseArray, DenseArray, DenseArray), NumericError> {
    let bias = DenseArray::zeros(&[weight.last_dim()]);
    let (n, d_in, d_out) = affine_dims(input, weight, &bias)?;
    if grad_out.shape() != [n, d_out] {
        return Err(NumericError::Dimension {
            op: "affine_backward",
            left: vec![n, d_out],
            right: grad_out.shape().to_vec(),
        });
    }
    let mut d_input = DenseArray::zeros(&[n, d_in]);
    let mut d_weight = DenseArray::zeros(&[d_in, d_out]);
    let mut d_bias = DenseArray::zeros(&[d_out]);
    for i in 0..n {
        let g = grad_out.row(i);
        let x = input.row(i);
        for (db, gj) in d_bias.data_mut().iter_mut().zip(g) {
            *db += gj;
        }
        for k in 0..d_in {
            let w = weight.row(k);
            d_input.row_mut(i)[k] = w.iter().zip(g).map(|(a, b)| a * b).sum();
            let xk = x[k];
            for (dw, gj) in d_weight.row_mut(k).iter_mut().zip(g) {
                *dw += xk * gj;
            }
        }
    }
    Ok((d_input, d_weight, d_bias))
}

fn affine_dims(
    input: &DenseArray,
    weight: &DenseArray,
    bias: &DenseArray,
) -> Result<(usize, usize, usize), NumericError> {
    let mismatch = |right: &DenseArray| NumericError::Dimension {
        op: "affine",
        left: input.shape().to_vec(),
        right: right.shape().to_vec(),
    };
    if input.ndim() != 2 || weight.ndim() != 2 || weight.shape()[0] != input.shape()[1] {
        return Err(mismatch(weight));
    }
    if bias.shape() != [weight.shape()[1]] {
        return Err(NumericError::Dimension {
            op: "affine",
            left: weight.shape().to_vec(),
            right: bias.shape().to_vec(),
        });
    }
    Ok((input.shape()[0], weight.shape()[0], weight.shape()[1]))
}

/// Row-wise softmax over the last axis, with max subtraction.
pub fn softmax(logits: &DenseArray) -> DenseArray {
    let mut out = logits.clone();
    let rows = if out.is_empty() { 0 } else { out.len() / out.last_dim() };
    for i in 0..rows {
        softmax_in_place(out.row_mut(i));
    }
    out
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

fn check_labels(predicted: &DenseArray, targets: &[u8]) -> Result<(), NumericError> {
    if predicted.ndim() != 2 || predicted.shape()[0] != targets.len() || predicted.shape()[1] != 2 {
        return Err(NumericError::Dimension {
            op: "bce_loss",
            left: predicted.shape().to_vec(),
            right: vec![targets.len(), 2],
        });
    }
    if let Some(&bad) = targets.iter().find(|&&t| t > 1) {
        return Err(NumericError::InvalidLabel(bad));
    }
    Ok(())
}

/// Mean negative log-likelihood of the target class over `n×2` probability rows.
pub fn bce_loss(predicted: &DenseArray, targets: &[u8]) -> Result<LossValue, NumericError> {
    check_labels(predicted, targets)?;
    if targets.is_empty() {
        return Ok(LossValue(0.0));
    }
    let total: f64 = targets
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let p = predicted.row(i)[t as usize].clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
            -p.ln()
        })
        .sum();
    // -ln(1 - 1e-12) is a hair above zero; report clamped-perfect rows as exactly 0.
    let floor = -(1.0 - LOG_CLAMP).ln();
    let mean = total / targets.len() as f64;
    Ok(LossValue(if mean <= floor { 0.0 } else { mean }))
}

/// Gradient of [`bce_loss`] applied to `softmax(logits)` with respect to the logits.
///
/// Rows whose target probability sits on a clamp boundary contribute zero,
/// matching the derivative of the clamped loss.
pub fn bce_softmax_backward(probabilities: &DenseArray, targets: &[u8]) -> Result<DenseArray, NumericError> {
    check_labels(probabilities, targets)?;
    let n = targets.len();
    let mut grad = DenseArray::zeros(probabilities.shape());
    for (i, &t) in targets.iter().enumerate() {
        let p = probabilities.row(i);
        let pt = p[t as usize];
        if !(LOG_CLAMP..=1.0 - LOG_CLAMP).contains(&pt) {
            continue;
        }
        let g = grad.row_mut(i);
        for k in 0..2 {
            let onehot = if k == t as usize { 1.0 } else { 0.0 };
            g[k] = (p[k] - onehot) / n as f64;
        }
    }
    Ok(grad)
}

/// Inverted-dropout scale factors: 0 for dropped elements, `1/(1-rate)` for survivors.
pub fn dropout_mask(len: usize, rate: f64, seed: u64) -> Result<Vec<f64>, NumericError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NumericError::InvalidRate(rate));
    }
    if rate == 0.0 {
        return Ok(vec![1.0; len]);
    }
    let keep = 1.0 / (1.0 - rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect())
}

pub fn dropout(input: &DenseArray, rate: f64, seed: u64, training: bool) -> Result<DenseArray, NumericError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NumericError::InvalidRate(rate));
    }
    if !training || rate == 0.0 {
        return Ok(input.clone());
    }
    let mask = dropout_mask(input.len(), rate, seed)?;
    let mut out = input.clone();
    out.data_mut().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(rows: &[&[f64]]) -> DenseArray {
        DenseArray::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn affine_identity_weight() {
        let out = affine(
            &arr(&[&[1.0, 2.0]]),
            &arr(&[&[1.0, 0.0], &[0.0, 1.0]]),
            &DenseArray::vector(vec![0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(out.data(), &[1.0, 2.0]);
    }

    #[test]
    fn affine_hand_multiply() {
        let out = affine(
            &arr(&[&[1.0, 1.0]]),
            &arr(&[&[2.0, 3.0], &[4.0, 5.0]]),
            &DenseArray::vector(vec![1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(out.data(), &[7.0, 9.0]);
    }

    #[test]
    fn affine_zero_input_returns_bias() {
        let out = affine(
            &arr(&[&[0.0, 0.0]]),
            &arr(&[&[0.3, -7.0], &[11.0, 2.5]]),
            &DenseArray::vector(vec![-1.5, 4.25]),
        )
        .unwrap();
        assert_eq!(out.data(), &[-1.5, 4.25]);
    }

    #[test]
    fn affine_shape_error_names_both_shapes() {
        let err = affine(
            &arr(&[&[1.0, 2.0, 3.0]]),
            &arr(&[&[1.0, 0.0], &[0.0, 1.0]]),
            &DenseArray::vector(vec![0.0, 0.0]),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[1, 3]") && msg.contains("[2, 2]"), "{msg}");
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&arr(&[&[0.0, 0.0]])).data(), &[0.5, 0.5]);
        let s = softmax(&arr(&[&[1.0f64.ln(), 3.0f64.ln()]]));
        assert!((s.data()[0] - 0.25).abs() < 1e-15);
        assert!((s.data()[1] - 0.75).abs() < 1e-15);
        assert_eq!(softmax(&arr(&[&[1000.0, 1000.0]])).data(), &[0.5, 0.5]);
    }

    #[test]
    fn bce_examples() {
        let perfect = bce_loss(&arr(&[&[0.0, 1.0]]), &[1]).unwrap();
        assert_eq!(perfect.value(), 0.0);
        let half = bce_loss(&arr(&[&[0.5, 0.5]]), &[0]).unwrap();
        assert!((half.value() - std::f64::consts::LN_2).abs() < 1e-15);
        let two = bce_loss(&arr(&[&[0.5, 0.5], &[0.5, 0.5]]), &[0, 1]).unwrap();
        assert!((two.value() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn bce_rejects_bad_label() {
        assert!(matches!(
            bce_loss(&arr(&[&[0.5, 0.5]]), &[2]),
            Err(NumericError::InvalidLabel(2))
        ));
    }

    #[test]
    fn dropout_identity_cases() {
        let x = DenseArray::vector(vec![1.0, -2.0, 3.0]);
        assert_eq!(dropout(&x, 0.0, 7, true).unwrap(), x);
        assert_eq!(dropout(&x, 0.9, 7, false).unwrap(), x);
        assert!(matches!(dropout(&x, 1.0, 7, true), Err(NumericError::InvalidRate(_))));
    }

    #[test]
    fn dropout_preserves_mean() {
        let x = DenseArray::filled(&[100_000], 1.0);
        let y = dropout(&x, 0.5, 42, true).unwrap();
        let mean = y.data().iter().sum::<f64>() / y.len() as f64;
        assert!((0.98..=1.02).contains(&mean), "mean {mean}");
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
