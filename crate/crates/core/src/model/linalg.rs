//! Row-vector kernels over row-major matrices.

use crate::numeric::DenseArray;

/// `out += v · M` where `M` is `v.len() × out.len()`.
#[inline]
pub(crate) fn add_vec_mat(out: &mut [f64], v: &[f64], m: &DenseArray) {
    for (k, &vk) in v.iter().enumerate() {
        if vk == 0.0 {
            continue;
        }
        for (o, w) in out.iter_mut().zip(m.row(k)) {
            *o += vk * w;
        }
    }
}

/// `out[k] += Σ_j M[k][j] · g[j]`, i.e. `out += M · g`.
#[inline]
pub(crate) fn add_mat_vec(out: &mut [f64], m: &DenseArray, g: &[f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        *o += m.row(k).iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `grad += vᵀ g` (outer product accumulation).
#[inline]
pub(crate) fn add_outer(grad: &mut DenseArray, v: &[f64], g: &[f64]) {
    for (k, &vk) in v.iter().enumerate() {
        if vk == 0.0 {
            continue;
        }
        for (d, gj) in grad.row_mut(k).iter_mut().zip(g) {
            *d += vk * gj;
        }
    }
}

#[inline]
pub(crate) fn add_into(out: &mut [f64], g: &[f64]) {
    for (o, x) in out.iter_mut().zip(g) {
        *o += x;
    }
}
