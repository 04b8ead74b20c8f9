//! Class-balancing downsampling and stratified splits.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, DatasetError, UserRecord};

/// Keeps every minority-class user and a uniform random subset of the
/// majority class of the same size. Users keep their original order.
pub fn downsample(corpus: &Corpus, seed: u64) -> Result<Corpus, DatasetError> {
    let counts = corpus.counts();
    if counts.negative == counts.positive {
        return Ok(corpus.clone());
    }
    let (majority, minority_size) = if counts.negative > counts.positive {
        (0u8, counts.positive)
    } else {
        (1u8, counts.negative)
    };
    if minority_size == 0 {
        return Err(DatasetError::EmptyClass { label: 1 - majority });
    }

    let majority_idx: Vec<usize> = corpus
        .users()
        .iter()
        .enumerate()
        .filter(|(_, u)| u.label() == majority)
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; corpus.len()];
    for pick in index::sample(&mut rng, majority_idx.len(), minority_size) {
        keep[majority_idx[pick]] = true;
    }
    let users = corpus
        .users()
        .iter()
        .zip(&keep)
        .filter(|(u, &k)| k || u.label() != majority)
        .map(|(u, _)| u.clone())
        .collect();
    Corpus::new(users)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let parts = [self.train, self.validation, self.test];
        let sum: f64 = parts.iter().sum();
        if parts.iter().any(|f| !f.is_finite() || *f < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidFractions(parts));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
}

/// Stratified three-way split. Each class is shuffled with the seed and cut
/// at `round(n·train)` and `round(n·validation)`; the test split takes the rest.
pub fn split(corpus: &Corpus, fractions: SplitFractions, seed: u64) -> Result<Split, DatasetError> {
    fractions.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 0 = train, 1 = validation, 2 = test
    let mut assignment = vec![0u8; corpus.len()];
    for label in [0u8, 1] {
        let mut idx: Vec<usize> = corpus
            .users()
            .iter()
            .enumerate()
            .filter(|(_, u)| u.label() == label)
            .map(|(i, _)| i)
            .collect();
        let n = idx.len();
        let n_train = (n as f64 * fractions.train).round() as usize;
        let n_val = (n as f64 * fractions.validation).round() as usize;
        if n_train == 0 || n_val == 0 || n_train + n_val >= n {
            return Err(DatasetError::Stratification { label, available: n });
        }
        idx.shuffle(&mut rng);
        for (rank, &i) in idx.iter().enumerate() {
            assignment[i] = if rank < n_train {
                0
            } else if rank < n_train + n_val {
                1
            } else {
                2
            };
        }
    }
    let pick = |part: u8| -> Result<Corpus, DatasetError> {
        let users: Vec<UserRecord> = corpus
            .users()
            .iter()
            .zip(&assignment)
            .filter(|(_, &a)| a == part)
            .map(|(u, _)| u.clone())
            .collect();
        Corpus::new(users)
    };
    Ok(Split {
        train: pick(0)?,
        validation: pick(1)?,
        test: pick(2)?,
    })
}
