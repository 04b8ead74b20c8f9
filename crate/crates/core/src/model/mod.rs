//! Recurrent sequence classifiers with hand-written backward passes.

mod checkpoint;
mod config;
mod linalg;
mod network;
mod params;
mod pooling;
mod recurrent;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, load_checkpoint_for, save_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{Architecture, ModelConfig, Pooling, DEFAULT_GRU_DROPOUT, DEFAULT_HIDDEN};
pub use network::{
    apply_decay, backward, backward_with_inputs, forward, forward_head, forward_streams, fuse, text_baseline_forward,
    ForwardTrace, Mode, Streams,
};
pub use params::{
    check_params, init_params, parameter_layout, ATTN_B, ATTN_V, ATTN_W, EMOTION_B, EMOTION_W_H, EMOTION_W_X, HEAD_B,
    HEAD_W, TEXT_B, TEXT_W_H, TEXT_W_X,
};
pub use pooling::{attention_pool, last_pool, mean_pool, pool_backward, AttentionWeights, PoolGrads, Pooled};
pub use recurrent::{
    recurrent_backward, recurrent_forward, CellKind, RecurrentCache, RecurrentGrads, RecurrentWeights,
};

use thiserror::Error;

use crate::numeric::NumericError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("model config: {0}")]
    Config(String),
    #[error("trace: {0}")]
    Trace(String),
    #[error("checkpoint integrity: {0}")]
    Integrity(String),
    #[error("incompatible checkpoint: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
