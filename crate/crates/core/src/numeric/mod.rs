//! Dense arrays, differentiable primitives and the Adam optimizer.

mod adam;
mod array;
mod ops;

pub use adam::{clip_global_norm, AdamConfig, Gradients, ParameterSet};
pub use array::DenseArray;
pub(crate) use ops::softmax_in_place;
pub use ops::{
    affine, affine_backward, bce_loss, bce_softmax_backward, dropout, dropout_mask, sigmoid, softmax, LossValue,
    LOG_CLAMP,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("shape {shape:?} does not match data length {len}")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("label {0} is not in {{0, 1}}")]
    InvalidLabel(u8),
    #[error("dropout rate {0} must lie in [0, 1)")]
    InvalidRate(f64),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}
