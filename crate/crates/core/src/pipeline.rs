//! Corpus → encoded sequences → padded batches.

use crate::dataset::{compute_decay, pad_and_mask, DatasetError, EncodedBatch, EncodedUser, UserRecord, EMOTION_DIM};
use crate::encoders::{concat_encode, encode_user, EmotionEncoder, EncoderError, TextEncoder};
use crate::model::{Architecture, ModelConfig};
use crate::numeric::DenseArray;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("user `{user_id}`: {source}")]
    Encoder {
        user_id: String,
        #[source]
        source: EncoderError,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Encodes one user for `architecture`. The baseline yields a single step
/// holding the concatenation vector.
pub fn encode_for(
    architecture: Architecture,
    user: &UserRecord,
    text: &dyn TextEncoder,
    emotion: &dyn EmotionEncoder,
) -> Result<EncodedUser, PipelineError> {
    let wrap = |source| PipelineError::Encoder {
        user_id: user.user_id().to_owned(),
        source,
    };
    if architecture == Architecture::TextBaseline {
        let v = concat_encode(user, text).map_err(wrap)?;
        return Ok(EncodedUser {
            text: DenseArray::new(vec![1, v.len()], v).expect("single row"),
            emotion: DenseArray::zeros(&[1, EMOTION_DIM]),
            decay: vec![1.0],
            label: user.label(),
        });
    }
    let (text_m, emotion_m) = encode_user(user, text, emotion).map_err(wrap)?;
    Ok(EncodedUser {
        text: text_m,
        emotion: emotion_m,
        decay: compute_decay(&user.timestamps())?,
        label: user.label(),
    })
}

pub fn encode_users(
    config: &ModelConfig,
    users: &[UserRecord],
    text: &dyn TextEncoder,
    emotion: &dyn EmotionEncoder,
) -> Result<Vec<EncodedUser>, PipelineError> {
    users
        .iter()
        .map(|u| encode_for(config.architecture, u, text, emotion))
        .collect()
}

/// Consecutive batches of `batch_size` over `order` (indices into `users`);
/// the last batch may be smaller. Each batch is padded to its own longest
/// user unless `pad_to` is given.
pub fn make_batches(
    users: &[EncodedUser],
    order: &[usize],
    batch_size: usize,
    pad_to: Option<usize>,
) -> Result<Vec<EncodedBatch>, DatasetError> {
    order
        .chunks(batch_size.max(1))
        .map(|chunk| {
            let members: Vec<EncodedUser> = chunk.iter().map(|&i| users[i].clone()).collect();
            pad_and_mask(&members, pad_to)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Post;
    use crate::encoders::{EmbeddingStore, EmotionLexicon, HashingEncoder};

    fn user() -> UserRecord {
        let posts = vec![Post::new("i feel sad", 0), Post::new("poker again", 86_400)];
        UserRecord::new("u1", posts, 1).unwrap()
    }

    #[test]
    fn sequential_encoding_has_decay() {
        let enc = HashingEncoder::new(16, 0).unwrap();
        let e = encode_for(Architecture::LstmTd, &user(), &enc, &EmotionLexicon::default()).unwrap();
        assert_eq!(e.text.shape(), &[2, 16]);
        assert_eq!(e.decay[0], 1.0);
        assert!((e.decay[1] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn baseline_encoding_is_one_step() {
        let enc = HashingEncoder::new(16, 0).unwrap();
        let e = encode_for(Architecture::TextBaseline, &user(), &enc, &EmotionLexicon::default()).unwrap();
        assert_eq!(e.text.shape(), &[1, 16]);
        assert_eq!(e.text.data(), enc.encode("i feel sad poker again").as_slice());
    }

    #[test]
    fn store_errors_name_the_user() {
        let store = EmbeddingStore::new(4);
        let err = encode_for(Architecture::LstmTd, &user(), &store, &EmotionLexicon::default()).unwrap_err();
        assert!(err.to_string().contains("u1"));
    }

    #[test]
    fn batches_keep_tail() {
        let enc = HashingEncoder::new(8, 0).unwrap();
        let users = vec![encode_for(Architecture::Lstm, &user(), &enc, &EmotionLexicon::default()).unwrap(); 5];
        let batches = make_batches(&users, &[0, 1, 2, 3, 4], 2, None).unwrap();
        assert_eq!(
            batches.iter().map(|b| b.batch_size()).collect::<Vec<_>>(),
            vec![2, 2, 1]
        );
    }
}
