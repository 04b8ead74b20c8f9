use xxhash_rust::xxh64::xxh64;

use super::{EncoderError, TextEncoder};

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Signed feature hashing of a bag of words, L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEncoder {
    dim: usize,
    seed: u64,
}

pub const MIN_HASHING_DIM: usize = 8;

impl HashingEncoder {
    pub fn new(dim: usize, seed: u64) -> Result<Self, EncoderError> {
        if dim < MIN_HASHING_DIM {
            return Err(EncoderError::Config(format!(
                "hashing width {dim} is below the minimum of {MIN_HASHING_DIM}"
            )));
        }
        Ok(Self { dim, seed })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn encode(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for token in tokenize(text) {
            let h = xxh64(token.as_bytes(), self.seed);
            let bucket = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl TextEncoder for HashingEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_post(&self, _user: &str, _index: usize, text: &str) -> Result<Vec<f64>, EncoderError> {
        Ok(self.encode(text))
    }

    fn encode_joined(&self, text: &str) -> Result<Vec<f64>, EncoderError> {
        Ok(self.encode(text))
    }
}
