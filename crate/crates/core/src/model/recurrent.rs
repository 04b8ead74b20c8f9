//! LSTM and GRU layers over padded batches, with backpropagation through time.
//!
//! Inputs are `b×L×d`; each row `r` is valid for steps `t < lengths[r]`.
//! Padded steps copy the previous hidden (and cell) state unchanged, so their
//! inputs never influence the output and receive zero gradient.
//!
//! LSTM gate layout along the `4h` axis is `[input, forget, candidate, output]`:
//!
//! ```text
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```
//!
//! GRU layout along the `3h` axis is `[update, reset, candidate]`:
//!
//! ```text
//! n   = tanh(x W_n + r ⊙ (h_{t-1} U_n) + b_n)
//! h_t = (1 - z) ⊙ h_{t-1} + z ⊙ n
//! ```

use crate::numeric::{sigmoid, DenseArray};

use super::linalg::{add_into, add_mat_vec, add_outer, add_vec_mat};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    /// Number of stacked gate blocks in the weight matrices.
    pub fn gates(self) -> usize {
        match self {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }
}

/// Weights of one recurrent layer: `w_x: d×Gh`, `w_h: h×Gh`, `b: Gh`.
#[derive(Debug, Clone, Copy)]
pub struct RecurrentWeights<'a> {
    pub kind: CellKind,
    pub w_x: &'a DenseArray,
    pub w_h: &'a DenseArray,
    pub b: &'a DenseArray,
}

impl RecurrentWeights<'_> {
    pub fn hidden(&self) -> usize {
        self.w_h.shape()[0]
    }

    fn check(&self, inputs: &DenseArray, lengths: &[usize]) -> Result<(usize, usize, usize, usize), ModelError> {
        let h = self.hidden();
        let gh = self.kind.gates() * h;
        let dim_err = |what: &str| {
            ModelError::Dimension(format!(
                "{what}: inputs {:?}, w_x {:?}, w_h {:?}, b {:?}",
                inputs.shape(),
                self.w_x.shape(),
                self.w_h.shape(),
                self.b.shape()
            ))
        };
        if inputs.ndim() != 3 {
            return Err(dim_err("inputs must be 3-D"));
        }
        let (b, l, d) = (inputs.shape()[0], inputs.shape()[1], inputs.shape()[2]);
        if self.w_x.shape() != [d, gh] || self.w_h.shape() != [h, gh] || self.b.shape() != [gh] {
            return Err(dim_err("recurrent weight shapes"));
        }
        if lengths.len() != b || lengths.iter().any(|&n| n > l) {
            return Err(dim_err("lengths do not fit the batch"));
        }
        Ok((b, l, d, h))
    }
}

/// Activations cached by the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentCache {
    kind: CellKind,
    /// `b×L×4h`: LSTM `[i, f, g, o]` or GRU `[z, r, n, h_{t-1} U_n]`.
    gates: Vec<f64>,
    /// `b×L×h` LSTM cell states (empty for GRU).
    cells: Vec<f64>,
}

pub fn recurrent_forward(
    weights: RecurrentWeights<'_>,
    inputs: &DenseArray,
    lengths: &[usize],
) -> Result<(DenseArray, RecurrentCache), ModelError> {
    let (b, l, _d, h) = weights.check(inputs, lengths)?;
    let gh = weights.kind.gates() * h;
    let mut hidden = DenseArray::zeros(&[b, l, h]);
    let mut gates = vec![0.0; b * l * 4 * h];
    let mut cells = match weights.kind {
        CellKind::Lstm => vec![0.0; b * l * h],
        CellKind::Gru => Vec::new(),
    };
    let zeros = vec![0.0; h];
    let mut pre = vec![0.0; gh];
    let mut rec = vec![0.0; gh];

    for r in 0..b {
        for t in 0..l {
            let row = r * l + t;
            if t >= lengths[r] {
                if t > 0 {
                    let (prev, cur) = hidden.data_mut().split_at_mut(row * h);
                    cur[..h].copy_from_slice(&prev[(row - 1) * h..row * h]);
                    if weights.kind == CellKind::Lstm {
                        let (prev, cur) = cells.split_at_mut(row * h);
                        cur[..h].copy_from_slice(&prev[(row - 1) * h..row * h]);
                    }
                }
                continue;
            }
            let h_prev: Vec<f64> = if t == 0 {
                zeros.clone()
            } else {
                hidden.row(row - 1).to_vec()
            };
            pre.copy_from_slice(weights.b.data());
            add_vec_mat(&mut pre, inputs.row(row), weights.w_x);
            rec.iter_mut().for_each(|v| *v = 0.0);
            add_vec_mat(&mut rec, &h_prev, weights.w_h);
            let g = &mut gates[row * 4 * h..(row + 1) * 4 * h];

            match weights.kind {
                CellKind::Lstm => {
                    let c_prev: Vec<f64> = if t == 0 {
                        zeros.clone()
                    } else {
                        cells[(row - 1) * h..row * h].to_vec()
                    };
                    for k in 0..h {
                        let i = sigmoid(pre[k] + rec[k]);
                        let f = sigmoid(pre[h + k] + rec[h + k]);
                        let cand = (pre[2 * h + k] + rec[2 * h + k]).tanh();
                        let o = sigmoid(pre[3 * h + k] + rec[3 * h + k]);
                        let c = f * c_prev[k] + i * cand;
                        g[k] = i;
                        g[h + k] = f;
                        g[2 * h + k] = cand;
                        g[3 * h + k] = o;
                        cells[row * h + k] = c;
                        hidden.row_mut(row)[k] = o * c.tanh();
                    }
                }
                CellKind::Gru => {
                    for k in 0..h {
                        let z = sigmoid(pre[k] + rec[k]);
                        let rr = sigmoid(pre[h + k] + rec[h + k]);
                        let hn = rec[2 * h + k];
                        let n = (pre[2 * h + k] + rr * hn).tanh();
                        g[k] = z;
                        g[h + k] = rr;
                        g[2 * h + k] = n;
                        g[3 * h + k] = hn;
                        hidden.row_mut(row)[k] = (1.0 - z) * h_prev[k] + z * n;
                    }
                }
            }
        }
    }
    Ok((
        hidden,
        RecurrentCache {
            kind: weights.kind,
            gates,
            cells,
        },
    ))
}

/// Parameter gradients of one recurrent layer, plus input gradients when requested.
#[derive(Debug, Clone)]
pub struct RecurrentGrads {
    pub w_x: DenseArray,
    pub w_h: DenseArray,
    pub b: DenseArray,
    pub inputs: Option<DenseArray>,
}

pub fn recurrent_backward(
    weights: RecurrentWeights<'_>,
    inputs: &DenseArray,
    lengths: &[usize],
    hidden: &DenseArray,
    cache: &RecurrentCache,
    d_hidden: &DenseArray,
    want_input_grad: bool,
) -> Result<RecurrentGrads, ModelError> {
    let (b, l, d, h) = weights.check(inputs, lengths)?;
    if cache.kind != weights.kind
        || hidden.shape() != [b, l, h]
        || d_hidden.shape() != [b, l, h]
        || cache.gates.len() != b * l * 4 * h
    {
        return Err(ModelError::Trace("recurrent cache does not match the batch".into()));
    }
    let gh = weights.kind.gates() * h;
    let mut grads = RecurrentGrads {
        w_x: DenseArray::zeros(weights.w_x.shape()),
        w_h: DenseArray::zeros(weights.w_h.shape()),
        b: DenseArray::zeros(weights.b.shape()),
        inputs: want_input_grad.then(|| DenseArray::zeros(&[b, l, d])),
    };
    let zeros = vec![0.0; h];
    let mut dz = vec![0.0; gh];
    let mut dh_carry = vec![0.0; h];
    let mut dc_carry = vec![0.0; h];
    let mut dh = vec![0.0; h];
    let mut dx = vec![0.0; d];

    for r in 0..b {
        dh_carry.iter_mut().for_each(|v| *v = 0.0);
        dc_carry.iter_mut().for_each(|v| *v = 0.0);
        for t in (0..l).rev() {
            let row = r * l + t;
            for k in 0..h {
                dh[k] = d_hidden.row(row)[k] + dh_carry[k];
            }
            if t >= lengths[r] {
                dh_carry.copy_from_slice(&dh);
                continue;
            }
            let h_prev: &[f64] = if t == 0 { &zeros } else { hidden.row(row - 1) };
            let g = &cache.gates[row * 4 * h..(row + 1) * 4 * h];
            let mut dh_prev = vec![0.0; h];

            match weights.kind {
                CellKind::Lstm => {
                    let c = &cache.cells[row * h..(row + 1) * h];
                    let c_prev: &[f64] = if t == 0 {
                        &zeros
                    } else {
                        &cache.cells[(row - 1) * h..row * h]
                    };
                    for k in 0..h {
                        let (i, f, cand, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                        let tc = c[k].tanh();
                        let dc = dc_carry[k] + dh[k] * o * (1.0 - tc * tc);
                        dz[k] = dc * cand * i * (1.0 - i);
                        dz[h + k] = dc * c_prev[k] * f * (1.0 - f);
                        dz[2 * h + k] = dc * i * (1.0 - cand * cand);
                        dz[3 * h + k] = dh[k] * tc * o * (1.0 - o);
                        dc_carry[k] = dc * f;
                    }
                    add_into(grads.b.data_mut(), &dz);
                    add_outer(&mut grads.w_x, inputs.row(row), &dz);
                    add_outer(&mut grads.w_h, h_prev, &dz);
                    add_mat_vec(&mut dh_prev, weights.w_h, &dz);
                    if let Some(gi) = grads.inputs.as_mut() {
                        dx.iter_mut().for_each(|v| *v = 0.0);
                        add_mat_vec(&mut dx, weights.w_x, &dz);
                        gi.row_mut(row).copy_from_slice(&dx);
                    }
                }
                CellKind::Gru => {
                    // dz holds d(pre-activation from x) for [z, r, n];
                    // dah is the same except the candidate block, which is d(h_{t-1} U_n).
                    let mut dah = vec![0.0; gh];
                    for k in 0..h {
                        let (z, rr, n, hn) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                        let dzg = dh[k] * (n - h_prev[k]);
                        let dn = dh[k] * z;
                        dh_prev[k] = dh[k] * (1.0 - z);
                        let dan = dn * (1.0 - n * n);
                        let dr = dan * hn;
                        let daz = dzg * z * (1.0 - z);
                        let dar = dr * rr * (1.0 - rr);
                        dz[k] = daz;
                        dz[h + k] = dar;
                        dz[2 * h + k] = dan;
                        dah[k] = daz;
                        dah[h + k] = dar;
                        dah[2 * h + k] = dan * rr;
                    }
                    add_into(grads.b.data_mut(), &dz);
                    add_outer(&mut grads.w_x, inputs.row(row), &dz);
                    add_outer(&mut grads.w_h, h_prev, &dah);
                    add_mat_vec(&mut dh_prev, weights.w_h, &dah);
                    if let Some(gi) = grads.inputs.as_mut() {
                        dx.iter_mut().for_each(|v| *v = 0.0);
                        add_mat_vec(&mut dx, weights.w_x, &dz);
                        gi.row_mut(row).copy_from_slice(&dx);
                    }
                }
            }
            dh_carry.copy_from_slice(&dh_prev);
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_masked_row_is_zero() {
        let w_x = DenseArray::filled(&[2, 4], 0.3);
        let w_h = DenseArray::filled(&[1, 4], -0.2);
        let b = DenseArray::filled(&[4], 0.1);
        let w = RecurrentWeights {
            kind: CellKind::Lstm,
            w_x: &w_x,
            w_h: &w_h,
            b: &b,
        };
        let x = DenseArray::filled(&[2, 3, 2], 1.0);
        let (h, _) = recurrent_forward(w, &x, &[0, 3]).unwrap();
        assert!(h.data()[..3].iter().all(|&v| v == 0.0));
        assert!(h.data()[3..].iter().all(|&v| v != 0.0));
    }

    #[test]
    fn zero_parameters_give_zero_states() {
        for kind in [CellKind::Lstm, CellKind::Gru] {
            let g = kind.gates();
            let w_x = DenseArray::zeros(&[3, g * 2]);
            let w_h = DenseArray::zeros(&[2, g * 2]);
            let b = DenseArray::zeros(&[g * 2]);
            let w = RecurrentWeights {
                kind,
                w_x: &w_x,
                w_h: &w_h,
                b: &b,
            };
            let x = DenseArray::new(vec![1, 4, 3], (0..12).map(|i| i as f64 - 5.0).collect()).unwrap();
            let (h, _) = recurrent_forward(w, &x, &[4]).unwrap();
            assert!(h.data().iter().all(|&v| v == 0.0), "{kind:?}");
        }
    }

    #[test]
    fn lstm_two_step_hand_unroll() {
        // d = h = 1; gate weights [i, f, g, o].
        let w_x = DenseArray::new(vec![1, 4], vec![0.5, -0.3, 0.8, 0.2]).unwrap();
        let w_h = DenseArray::new(vec![1, 4], vec![0.1, 0.4, -0.6, 0.7]).unwrap();
        let b = DenseArray::new(vec![4], vec![0.0, 0.1, -0.1, 0.05]).unwrap();
        let w = RecurrentWeights {
            kind: CellKind::Lstm,
            w_x: &w_x,
            w_h: &w_h,
            b: &b,
        };
        let xs = [1.5, -0.7];
        let x = DenseArray::new(vec![1, 2, 1], xs.to_vec()).unwrap();
        let (h, _) = recurrent_forward(w, &x, &[2]).unwrap();

        let s = |v: f64| 1.0 / (1.0 + (-v).exp());
        let (mut hp, mut cp) = (0.0, 0.0);
        let mut expected = Vec::new();
        for xt in xs {
            let i = s(0.5 * xt + 0.1 * hp + 0.0);
            let f = s(-0.3 * xt + 0.4 * hp + 0.1);
            let g = (0.8 * xt - 0.6 * hp - 0.1).tanh();
            let o = s(0.2 * xt + 0.7 * hp + 0.05);
            cp = f * cp + i * g;
            hp = o * cp.tanh();
            expected.push(hp);
        }
        for (a, e) in h.data().iter().zip(&expected) {
            assert!((a - e).abs() < 1e-15, "{a} vs {e}");
        }
    }

    #[test]
    fn gru_single_step_hand_unroll() {
        let w_x = DenseArray::new(vec![1, 3], vec![0.9, -0.4, 1.2]).unwrap();
        let w_h = DenseArray::new(vec![1, 3], vec![0.3, 0.2, -0.5]).unwrap();
        let b = DenseArray::new(vec![3], vec![0.1, 0.0, -0.2]).unwrap();
        let w = RecurrentWeights {
            kind: CellKind::Gru,
            w_x: &w_x,
            w_h: &w_h,
            b: &b,
        };
        let x = DenseArray::new(vec![1, 1, 1], vec![0.8]).unwrap();
        let (h, _) = recurrent_forward(w, &x, &[1]).unwrap();
        let s = |v: f64| 1.0 / (1.0 + (-v).exp());
        let z = s(0.9 * 0.8 + 0.1);
        let n = (1.2 * 0.8 - 0.2f64).tanh();
        let expected = z * n;
        assert!((h.data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn padded_steps_copy_state() {
        let w_x = DenseArray::filled(&[1, 8], 0.2);
        let w_h = DenseArray::filled(&[2, 8], 0.1);
        let b = DenseArray::zeros(&[8]);
        let w = RecurrentWeights {
            kind: CellKind::Lstm,
            w_x: &w_x,
            w_h: &w_h,
            b: &b,
        };
        let x = DenseArray::new(vec![1, 4, 1], vec![1.0, 2.0, 99.0, 99.0]).unwrap();
        let (h, _) = recurrent_forward(w, &x, &[2]).unwrap();
        assert_eq!(h.row(1), h.row(2));
        assert_eq!(h.row(1), h.row(3));
    }
}
