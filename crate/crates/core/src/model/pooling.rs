//! Sequence reductions to one vector per user.
//!
//! Additive attention scores each valid step with `vᵀ tanh(h_t W + b)` and
//! softmax-normalizes over valid steps only; padding receives weight exactly 0.
//! Mean and last-state pooling are expressed as fixed weight vectors so all
//! three share one backward path for the pooled sum.

use crate::numeric::{softmax_in_place, DenseArray};

use super::linalg::{add_mat_vec, add_outer, add_vec_mat};
use super::ModelError;

#[derive(Debug, Clone, Copy)]
pub struct AttentionWeights<'a> {
    /// `h×a`
    pub w: &'a DenseArray,
    /// `a`
    pub b: &'a DenseArray,
    /// `a`
    pub v: &'a DenseArray,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    /// `b×h`
    pub output: DenseArray,
    /// `b×L`, summing to 1 over each row's valid steps.
    pub weights: DenseArray,
    /// `b×L×a` attention projections `tanh(h_t W + b)`; empty for fixed pooling.
    projections: Vec<f64>,
}

fn check(states: &DenseArray, lengths: &[usize]) -> Result<(usize, usize, usize), ModelError> {
    if states.ndim() != 3 || lengths.len() != states.shape()[0] {
        return Err(ModelError::Dimension(format!(
            "pooling over {:?} with {} lengths",
            states.shape(),
            lengths.len()
        )));
    }
    let (b, l, h) = (states.shape()[0], states.shape()[1], states.shape()[2]);
    if let Some(r) = lengths.iter().position(|&n| n == 0 || n > l) {
        return Err(ModelError::Validation(format!(
            "row {r} has no valid positions to pool"
        )));
    }
    Ok((b, l, h))
}

fn weighted_sum(states: &DenseArray, weights: &DenseArray, lengths: &[usize]) -> DenseArray {
    let (b, l, h) = (states.shape()[0], states.shape()[1], states.shape()[2]);
    let mut out = DenseArray::zeros(&[b, h]);
    for r in 0..b {
        let o = out.row_mut(r);
        for t in 0..lengths[r] {
            let w = weights.data()[r * l + t];
            for (ok, s) in o.iter_mut().zip(states.row(r * l + t)) {
                *ok += w * s;
            }
        }
    }
    out
}

pub fn attention_pool(
    states: &DenseArray,
    lengths: &[usize],
    params: AttentionWeights<'_>,
) -> Result<Pooled, ModelError> {
    let (b, l, h) = check(states, lengths)?;
    let a = params.v.len();
    if params.w.shape() != [h, a] || params.b.shape() != [a] || params.v.shape() != [a] {
        return Err(ModelError::Dimension(format!(
            "attention weights w {:?}, b {:?}, v {:?} for hidden width {h}",
            params.w.shape(),
            params.b.shape(),
            params.v.shape()
        )));
    }
    let mut projections = vec![0.0; b * l * a];
    let mut weights = DenseArray::zeros(&[b, l]);
    for r in 0..b {
        let n = lengths[r];
        let mut scores = vec![0.0; n];
        for (t, score) in scores.iter_mut().enumerate() {
            let u = &mut projections[(r * l + t) * a..(r * l + t + 1) * a];
            u.copy_from_slice(params.b.data());
            add_vec_mat(u, states.row(r * l + t), params.w);
            u.iter_mut().for_each(|x| *x = x.tanh());
            *score = u.iter().zip(params.v.data()).map(|(x, y)| x * y).sum();
        }
        softmax_in_place(&mut scores);
        weights.data_mut()[r * l..r * l + n].copy_from_slice(&scores);
    }
    Ok(Pooled {
        output: weighted_sum(states, &weights, lengths),
        weights,
        projections,
    })
}

pub fn mean_pool(states: &DenseArray, lengths: &[usize]) -> Result<Pooled, ModelError> {
    let (b, l, _) = check(states, lengths)?;
    let mut weights = DenseArray::zeros(&[b, l]);
    for (r, &n) in lengths.iter().enumerate() {
        let w = 1.0 / n as f64;
        weights.data_mut()[r * l..r * l + n].iter_mut().for_each(|x| *x = w);
    }
    Ok(Pooled {
        output: weighted_sum(states, &weights, lengths),
        weights,
        projections: Vec::new(),
    })
}

pub fn last_pool(states: &DenseArray, lengths: &[usize]) -> Result<Pooled, ModelError> {
    let (b, l, _) = check(states, lengths)?;
    let mut weights = DenseArray::zeros(&[b, l]);
    for (r, &n) in lengths.iter().enumerate() {
        weights.data_mut()[r * l + n - 1] = 1.0;
    }
    Ok(Pooled {
        output: weighted_sum(states, &weights, lengths),
        weights,
        projections: Vec::new(),
    })
}

/// Gradients through a pooling step: `(d_states, attention param grads)`.
pub struct PoolGrads {
    pub states: DenseArray,
    pub w: Option<DenseArray>,
    pub b: Option<DenseArray>,
    pub v: Option<DenseArray>,
}

pub fn pool_backward(
    states: &DenseArray,
    lengths: &[usize],
    pooled: &Pooled,
    attention: Option<AttentionWeights<'_>>,
    d_output: &DenseArray,
) -> Result<PoolGrads, ModelError> {
    let (b, l, h) = check(states, lengths)?;
    if d_output.shape() != [b, h] || pooled.weights.shape() != [b, l] {
        return Err(ModelError::Trace("pooling cache does not match the batch".into()));
    }
    let mut d_states = DenseArray::zeros(&[b, l, h]);
    for r in 0..b {
        let g = d_output.row(r);
        for t in 0..lengths[r] {
            let w = pooled.weights.data()[r * l + t];
            for (ds, gk) in d_states.row_mut(r * l + t).iter_mut().zip(g) {
                *ds += w * gk;
            }
        }
    }
    let Some(params) = attention else {
        return Ok(PoolGrads {
            states: d_states,
            w: None,
            b: None,
            v: None,
        });
    };

    let a = params.v.len();
    if pooled.projections.len() != b * l * a {
        return Err(ModelError::Trace("attention projections missing from cache".into()));
    }
    let mut dw = DenseArray::zeros(params.w.shape());
    let mut db = DenseArray::zeros(params.b.shape());
    let mut dv = DenseArray::zeros(params.v.shape());
    let mut dpre = vec![0.0; a];
    for r in 0..b {
        let n = lengths[r];
        let g = d_output.row(r);
        let alphas = &pooled.weights.data()[r * l..r * l + n];
        let d_alpha: Vec<f64> = (0..n)
            .map(|t| states.row(r * l + t).iter().zip(g).map(|(s, gk)| s * gk).sum())
            .collect();
        let mean: f64 = alphas.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
        for t in 0..n {
            let d_score = alphas[t] * (d_alpha[t] - mean);
            let u = &pooled.projections[(r * l + t) * a..(r * l + t + 1) * a];
            for j in 0..a {
                dv.data_mut()[j] += d_score * u[j];
                dpre[j] = d_score * params.v.data()[j] * (1.0 - u[j] * u[j]);
            }
            for (x, y) in db.data_mut().iter_mut().zip(&dpre) {
                *x += y;
            }
            add_outer(&mut dw, states.row(r * l + t), &dpre);
            add_mat_vec(d_states.row_mut(r * l + t), params.w, &dpre);
        }
    }
    Ok(PoolGrads {
        states: d_states,
        w: Some(dw),
        b: Some(db),
        v: Some(dv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attn_params(h: usize) -> (DenseArray, DenseArray, DenseArray) {
        let w = DenseArray::new(vec![h, h], (0..h * h).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let b = DenseArray::new(vec![h], (0..h).map(|i| i as f64 * 0.1).collect()).unwrap();
        let v = DenseArray::new(vec![h], (0..h).map(|i| 1.0 - i as f64 * 0.3).collect()).unwrap();
        (w, b, v)
    }

    #[test]
    fn single_step_gets_full_weight() {
        let (w, b, v) = attn_params(3);
        let s = DenseArray::new(vec![1, 1, 3], vec![0.2, -0.4, 0.9]).unwrap();
        let p = attention_pool(&s, &[1], AttentionWeights { w: &w, b: &b, v: &v }).unwrap();
        assert_eq!(p.weights.data(), &[1.0]);
        assert_eq!(p.output.data(), s.data());
    }

    #[test]
    fn identical_states_give_uniform_weights_and_zero_padding() {
        let (w, b, v) = attn_params(2);
        let mut data = Vec::new();
        for _ in 0..3 {
            data.extend_from_slice(&[0.5, -0.25]);
        }
        data.extend_from_slice(&[7.0, 7.0]);
        let s = DenseArray::new(vec![1, 4, 2], data).unwrap();
        let p = attention_pool(&s, &[3], AttentionWeights { w: &w, b: &b, v: &v }).unwrap();
        for t in 0..3 {
            assert!((p.weights.data()[t] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(p.weights.data()[3], 0.0);
    }

    #[test]
    fn fully_masked_row_is_rejected() {
        let s = DenseArray::zeros(&[2, 3, 2]);
        assert!(matches!(mean_pool(&s, &[2, 0]), Err(ModelError::Validation(_))));
    }

    #[test]
    fn mean_pool_examples() {
        let s = DenseArray::new(vec![1, 2, 1], vec![1.0, 3.0]).unwrap();
        assert_eq!(mean_pool(&s, &[2]).unwrap().output.data(), &[2.0]);
        let same = DenseArray::new(vec![1, 2, 2], vec![0.5, 1.5, 0.5, 1.5]).unwrap();
        assert_eq!(mean_pool(&same, &[2]).unwrap().output.data(), &[0.5, 1.5]);
        let one = DenseArray::new(vec![1, 3, 1], vec![4.0, 0.0, 0.0]).unwrap();
        assert_eq!(mean_pool(&one, &[1]).unwrap().output.data(), &[4.0]);
    }

    #[test]
    fn last_pool_takes_final_valid_state() {
        let s = DenseArray::new(vec![1, 3, 1], vec![1.0, 2.0, 9.0]).unwrap();
        assert_eq!(last_pool(&s, &[2]).unwrap().output.data(), &[2.0]);
    }
}
