//! Per-post text vectors and 7-way emotion distributions.
//!
//! Models only see the [`TextEncoder`] and [`EmotionEncoder`] traits; the
//! hashing encoder, the lexicon scorer and the file-backed store are
//! interchangeable behind them.

mod emotion;
mod hashing;
mod store;

pub use emotion::{EmotionLexicon, DEFAULT_EMOTIONS};
pub use hashing::{tokenize, HashingEncoder, MIN_HASHING_DIM};
pub use store::{EmbeddingStore, StoredPost};

use thiserror::Error;

use crate::dataset::{UserRecord, EMOTION_DIM};
use crate::numeric::DenseArray;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("record {key}: {message}")]
    Format { key: String, message: String },
    #[error("duplicate record ({user_id}, {post_index})")]
    Duplicate { user_id: String, post_index: usize },
    #[error("no stored vector for ({user_id}, {post_index})")]
    Missing { user_id: String, post_index: usize },
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("encoder config: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait TextEncoder: Send + Sync {
    fn dim(&self) -> usize;

    fn encode_post(&self, user_id: &str, post_index: usize, text: &str) -> Result<Vec<f64>, EncoderError>;

    /// Encodes free text that is not a stored post (the concatenation baseline).
    fn encode_joined(&self, text: &str) -> Result<Vec<f64>, EncoderError>;
}

pub trait EmotionEncoder: Send + Sync {
    fn encode_post(&self, user_id: &str, post_index: usize, text: &str) -> Result<Vec<f64>, EncoderError>;
}

/// Encodes every post of `user` into an `L×d_text` matrix and an `L×7` matrix,
/// row `i` holding post `i`.
pub fn encode_user(
    user: &UserRecord,
    text: &dyn TextEncoder,
    emotion: &dyn EmotionEncoder,
) -> Result<(DenseArray, DenseArray), EncoderError> {
    let d = text.dim();
    let l = user.len();
    let mut text_data = Vec::with_capacity(l * d);
    let mut emo_data = Vec::with_capacity(l * EMOTION_DIM);
    for (i, post) in user.posts().iter().enumerate() {
        let v = text.encode_post(user.user_id(), i, &post.text)?;
        if v.len() != d {
            return Err(EncoderError::Format {
                key: format!("({}, {i})", user.user_id()),
                message: format!("text encoder returned width {}, expected {d}", v.len()),
            });
        }
        text_data.extend_from_slice(&v);
        let e = emotion.encode_post(user.user_id(), i, &post.text)?;
        if e.len() != EMOTION_DIM {
            return Err(EncoderError::Format {
                key: format!("({}, {i})", user.user_id()),
                message: format!("emotion encoder returned width {}", e.len()),
            });
        }
        emo_data.extend_from_slice(&e);
    }
    let text_m = DenseArray::new(vec![l, d], text_data).expect("sized above");
    let emo_m = DenseArray::new(vec![l, EMOTION_DIM], emo_data).expect("sized above");
    Ok((text_m, emo_m))
}

/// All post texts joined with a single space, in chronological order.
pub fn joined_text(user: &UserRecord) -> String {
    user.posts()
        .iter()
        .map(|p| p.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn concat_encode(user: &UserRecord, text: &dyn TextEncoder) -> Result<Vec<f64>, EncoderError> {
    text.encode_joined(&joined_text(user))
}
