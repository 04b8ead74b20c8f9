//! Time-decay factors and padded, masked batches.

use crate::numeric::DenseArray;

use super::DatasetError;

/// Seconds per day; gaps are measured in days inside the exponent.
pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Width of the emotion distribution attached to each post.
pub const EMOTION_DIM: usize = 7;

/// `decay[0] = 1`, `decay[i] = exp(-(t[i] - t[i-1]) / 86400)`.
///
/// Results are floored at the smallest positive normal `f64` so real posts
/// never collide with the exact zero used for padding.
pub fn compute_decay(timestamps: &[i64]) -> Result<Vec<f64>, DatasetError> {
    let mut out = Vec::with_capacity(timestamps.len());
    for (i, &t) in timestamps.iter().enumerate() {
        if i == 0 {
            out.push(1.0);
            continue;
        }
        let prev = timestamps[i - 1];
        if t < prev {
            return Err(DatasetError::DecreasingTimestamps { index: i });
        }
        let gap = (t - prev) as f64;
        out.push((-gap / SECONDS_PER_DAY).exp().max(f64::MIN_POSITIVE));
    }
    Ok(out)
}

/// Index of the first post in the final quartile of a timeline of `len` posts.
pub fn final_quartile_start(len: usize) -> usize {
    (3 * len) / 4
}

/// A user's encoded sequence prior to padding.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedUser {
    /// `L×d_text`
    pub text: DenseArray,
    /// `L×7`
    pub emotion: DenseArray,
    /// length `L`
    pub decay: Vec<f64>,
    pub label: u8,
}

impl EncodedUser {
    pub fn len(&self) -> usize {
        self.decay.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decay.is_empty()
    }

    fn validate(&self, index: usize) -> Result<(), DatasetError> {
        let l = self.decay.len();
        let ok = l >= 1
            && self.text.ndim() == 2
            && self.emotion.ndim() == 2
            && self.text.shape()[0] == l
            && self.emotion.shape()[0] == l
            && self.label <= 1;
        if ok {
            Ok(())
        } else {
            Err(DatasetError::InconsistentUser { index })
        }
    }
}

/// Zero-padded batch with a trailing-padding validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBatch {
    /// `b×L×d_text`
    pub text: DenseArray,
    /// `b×L×7`
    pub emotion: DenseArray,
    /// `b×L`; exactly 0 on padding.
    pub decay: DenseArray,
    pub lengths: Vec<usize>,
    pub labels: Vec<u8>,
}

impl EncodedBatch {
    pub fn batch_size(&self) -> usize {
        self.lengths.len()
    }

    pub fn max_len(&self) -> usize {
        self.decay.shape()[1]
    }

    pub fn text_dim(&self) -> usize {
        self.text.shape()[2]
    }

    pub fn emotion_dim(&self) -> usize {
        self.emotion.shape()[2]
    }

    /// `mask[i][j] = 1` iff `j < lengths[i]`.
    #[inline]
    pub fn is_valid(&self, row: usize, step: usize) -> bool {
        step < self.lengths[row]
    }

    pub fn mask(&self) -> Vec<Vec<u8>> {
        let l = self.max_len();
        self.lengths
            .iter()
            .map(|&n| (0..l).map(|j| u8::from(j < n)).collect())
            .collect()
    }

    /// Reads back the unpadded user at `row`.
    pub fn unpad(&self, row: usize) -> EncodedUser {
        let n = self.lengths[row];
        let l = self.max_len();
        let slice = |arr: &DenseArray| {
            let w = arr.last_dim();
            let start = row * l * w;
            DenseArray::new(vec![n, w], arr.data()[start..start + n * w].to_vec()).expect("slice matches shape")
        };
        EncodedUser {
            text: slice(&self.text),
            emotion: slice(&self.emotion),
            decay: self.decay.data()[row * l..row * l + n].to_vec(),
            label: self.labels[row],
        }
    }
}

/// Pads every user to `max_len` (default: the longest user in the batch).
/// Users longer than `max_len` are rejected, never truncated.
pub fn pad_and_mask(users: &[EncodedUser], max_len: Option<usize>) -> Result<EncodedBatch, DatasetError> {
    let first = users.first().ok_or(DatasetError::EmptyBatch)?;
    for (i, u) in users.iter().enumerate() {
        u.validate(i)?;
    }
    let d_text = first.text.shape()[1];
    let d_emo = first.emotion.shape()[1];
    if let Some(i) = users
        .iter()
        .position(|u| u.text.shape()[1] != d_text || u.emotion.shape()[1] != d_emo)
    {
        return Err(DatasetError::InconsistentUser { index: i });
    }

    let longest = users.iter().map(EncodedUser::len).max().unwrap_or(0);
    let l_max = max_len.unwrap_or(longest);
    if l_max == 0 {
        return Err(DatasetError::SequenceTooLong {
            index: 0,
            len: longest,
            max_len: 0,
        });
    }
    if let Some(i) = users.iter().position(|u| u.len() > l_max) {
        return Err(DatasetError::SequenceTooLong {
            index: i,
            len: users[i].len(),
            max_len: l_max,
        });
    }

    let b = users.len();
    let mut text = DenseArray::zeros(&[b, l_max, d_text]);
    let mut emotion = DenseArray::zeros(&[b, l_max, d_emo]);
    let mut decay = DenseArray::zeros(&[b, l_max]);
    for (i, u) in users.iter().enumerate() {
        let n = u.len();
        let t0 = i * l_max * d_text;
        text.data_mut()[t0..t0 + n * d_text].copy_from_slice(u.text.data());
        let e0 = i * l_max * d_emo;
        emotion.data_mut()[e0..e0 + n * d_emo].copy_from_slice(u.emotion.data());
        decay.data_mut()[i * l_max..i * l_max + n].copy_from_slice(&u.decay);
    }
    Ok(EncodedBatch {
        text,
        emotion,
        decay,
        lengths: users.iter().map(EncodedUser::len).collect(),
        labels: users.iter().map(|u| u.label).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn user(len: usize, d: usize, fill: f64) -> EncodedUser {
        EncodedUser {
            text: DenseArray::filled(&[len, d], fill),
            emotion: DenseArray::filled(&[len, EMOTION_DIM], 1.0 / 7.0),
            decay: vec![0.5; len],
            label: 1,
        }
    }

    #[test]
    fn decay_examples() {
        assert_eq!(compute_decay(&[5, 5, 5]).unwrap(), vec![1.0, 1.0, 1.0]);
        let d = compute_decay(&[0, 86_400]).unwrap();
        assert_eq!(d[0], 1.0);
        assert!((d[1] - (-1.0f64).exp()).abs() < 1e-12);
        assert!((d[1] - 0.367_879_4).abs() < 1e-7);
        assert!(matches!(
            compute_decay(&[100, 50]),
            Err(DatasetError::DecreasingTimestamps { index: 1 })
        ));
    }

    #[test]
    fn decay_stays_positive_for_huge_gaps() {
        let d = compute_decay(&[0, 86_400 * 10_000]).unwrap();
        assert!(d[1] > 0.0 && d[1] <= 1.0);
    }

    #[test]
    fn mask_rows_match_lengths() {
        let b = pad_and_mask(&[user(3, 4, 1.0), user(5, 4, 2.0)], Some(5)).unwrap();
        assert_eq!(b.mask(), vec![vec![1, 1, 1, 0, 0], vec![1, 1, 1, 1, 1]]);
        for j in 3..5 {
            assert_eq!(b.decay.get(&[0, j]), 0.0);
            assert!(b.text.row(j).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn equal_lengths_are_not_padded() {
        let users = [user(4, 2, 1.0), user(4, 2, 3.0)];
        let b = pad_and_mask(&users, None).unwrap();
        assert_eq!(b.max_len(), 4);
        assert!(b.mask().iter().flatten().all(|&m| m == 1));
    }

    #[test]
    fn overlong_user_is_an_error() {
        assert!(matches!(
            pad_and_mask(&[user(6, 2, 1.0)], Some(5)),
            Err(DatasetError::SequenceTooLong { .. })
        ));
    }

    #[test]
    fn unpad_recovers_input() {
        let users = [user(2, 3, 0.25), user(5, 3, -1.5)];
        let b = pad_and_mask(&users, Some(7)).unwrap();
        for (i, u) in users.iter().enumerate() {
            assert_eq!(&b.unpad(i), u);
        }
    }
}
