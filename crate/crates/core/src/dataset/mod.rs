//! Corpus model, ingestion, synthetic generation, balancing, splitting,
//! decay factors and padding.

mod record;
mod sampling;
mod sequence;
mod synthetic;

pub use record::{ClassCounts, Corpus, Post, UserRecord};
pub use sampling::{downsample, split, Split, SplitFractions};
pub use sequence::{
    compute_decay, final_quartile_start, pad_and_mask, EncodedBatch, EncodedUser, EMOTION_DIM, SECONDS_PER_DAY,
};
pub use synthetic::{filler_word, generate_synthetic, SyntheticSpec, GAMBLING_LEXICON};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("user `{user_id}` has no posts")]
    EmptyPosts { user_id: String },
    #[error("user `{user_id}` has label {label}, expected 0 or 1")]
    InvalidLabel { user_id: String, label: i64 },
    #[error("user `{user_id}` has negative timestamp {timestamp}")]
    NegativeTimestamp { user_id: String, timestamp: i64 },
    #[error("duplicate user id `{0}`")]
    DuplicateUser(String),
    #[error("class {label} is empty")]
    EmptyClass { label: u8 },
    #[error("split fractions {0:?} must be non-negative and sum to 1")]
    InvalidFractions([f64; 3]),
    #[error("class {label} has {available} users, too few to populate every split")]
    Stratification { label: u8, available: usize },
    #[error("timestamps decrease at position {index}")]
    DecreasingTimestamps { index: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("user {index} in batch has inconsistent array shapes")]
    InconsistentUser { index: usize },
    #[error("user {index} has {len} posts, longer than max length {max_len}")]
    SequenceTooLong { index: usize, len: usize, max_len: usize },
    #[error("generator config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
