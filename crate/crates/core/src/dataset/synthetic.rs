//! Seeded synthetic corpora with planted temporal, lexical and emotional signal.
//!
//! Every user writes filler posts drawn from a pseudo-word vocabulary. Positive
//! users additionally produce "signal" posts carrying gambling-lexicon tokens
//! (and, optionally, target-emotion words). The chance that a post is a signal
//! post is `s · ((1 − r)/2 + r · [post in final quartile])`, so `r` moves the
//! signal toward the end of the timeline. Signal posts follow their predecessor
//! after a short "burst" gap. Background tokens of both kinds appear in every
//! user's posts at the same rate, so `s = 0` leaves the classes identically
//! distributed.
//!
//! With `decoy_rate = 1`, negative users write gambling-only and emotion-only
//! "decoy" posts at uniform positions and ordinary gaps, matching the expected
//! lexicon counts of a positive user. Bag-of-words totals then carry no class
//! information; co-occurrence within a post and timing still do.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use super::sequence::final_quartile_start;
use super::{Corpus, DatasetError, Post, UserRecord};
use crate::encoders::EmotionLexicon;

pub const GAMBLING_LEXICON: &[&str] = &[
    "bet",
    "bets",
    "betting",
    "casino",
    "slots",
    "jackpot",
    "poker",
    "wager",
    "odds",
    "roulette",
    "blackjack",
    "lottery",
    "parlay",
    "bookie",
    "spins",
    "payout",
    "gamble",
    "gambling",
    "losses",
    "chasing",
    "deposit",
    "stake",
    "rigged",
    "bankroll",
];

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ten", "ra", "su", "vo", "ne", "di", "pa", "ro", "li", "ta", "gu", "be", "sho",
];

/// Deterministic pseudo-word for filler index `i`.
pub fn filler_word(i: usize) -> String {
    let mut word = String::new();
    let mut n = i;
    for _ in 0..3 {
        word.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
    }
    while n > 0 {
        word.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
    }
    word
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub users: usize,
    pub positives: usize,
    pub min_posts: usize,
    pub max_posts: usize,
    /// Mean and standard deviation of the (log-normal) posts-per-user distribution.
    pub mean_posts: f64,
    pub std_posts: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub filler_vocabulary: usize,
    /// `s` in [0, 1].
    pub signal_strength: f64,
    /// `r` in [0, 1].
    pub recency: f64,
    pub emotion_signal: bool,
    pub target_emotion: String,
    /// Per-post probability of a stray gambling token, for every user.
    pub background_rate: f64,
    /// Per-post probability of a random emotion word, for every user.
    pub emotion_noise_rate: f64,
    /// Fraction of a positive user's expected lexicon count given to negatives as decoys.
    pub decoy_rate: f64,
    pub mean_gap_hours: f64,
    pub burst_gap_hours: f64,
    pub start_timestamp: i64,
}

impl Default for SyntheticSpec {
    /// Roughly one tenth of the reference corpus: same class ratio, shorter timelines.
    fn default() -> Self {
        Self {
            users: 438,
            positives: 24,
            min_posts: 3,
            max_posts: 200,
            mean_posts: 52.0,
            std_posts: 55.0,
            min_tokens: 4,
            max_tokens: 16,
            filler_vocabulary: 2000,
            signal_strength: 0.8,
            recency: 0.9,
            emotion_signal: true,
            target_emotion: "sadness".to_owned(),
            background_rate: 0.05,
            emotion_noise_rate: 0.2,
            decoy_rate: 0.0,
            mean_gap_hours: 48.0,
            burst_gap_hours: 2.0,
            start_timestamp: 1_577_836_800,
        }
    }
}

impl SyntheticSpec {
    /// Full-size class counts and post-count statistics of the reference corpus.
    pub fn full_scale() -> Self {
        Self {
            users: 4384,
            positives: 245,
            min_posts: 3,
            max_posts: 2002,
            mean_posts: 520.0,
            std_posts: 551.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let fail = |msg: &str| Err(DatasetError::Config(msg.to_owned()));
        if self.users == 0 {
            return fail("users must be positive");
        }
        if self.positives > self.users {
            return fail("positives exceed users");
        }
        if self.min_posts == 0 || self.min_posts > self.max_posts {
            return fail("need 1 <= min_posts <= max_posts");
        }
        if !(self.mean_posts > 0.0 && self.std_posts >= 0.0) {
            return fail("mean_posts must be positive and std_posts non-negative");
        }
        if self.min_tokens > self.max_tokens {
            return fail("min_tokens exceeds max_tokens");
        }
        if self.filler_vocabulary == 0 {
            return fail("filler_vocabulary must be positive");
        }
        for (name, v) in [
            ("signal_strength", self.signal_strength),
            ("recency", self.recency),
            ("background_rate", self.background_rate),
            ("emotion_noise_rate", self.emotion_noise_rate),
            ("decoy_rate", self.decoy_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(DatasetError::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.mean_gap_hours > 0.0 && self.burst_gap_hours > 0.0) {
            return fail("gap means must be positive");
        }
        if self.start_timestamp < 0 {
            return fail("start_timestamp must be non-negative");
        }
        if EmotionLexicon::default().index_of(&self.target_emotion).is_none() {
            return Err(DatasetError::Config(format!(
                "unknown target emotion `{}`",
                self.target_emotion
            )));
        }
        Ok(())
    }

    /// Probability that post `index` of a positive user with `len` posts carries signal.
    pub fn signal_probability(&self, index: usize, len: usize) -> f64 {
        let late = if index >= final_quartile_start(len) { 1.0 } else { 0.0 };
        self.signal_strength * ((1.0 - self.recency) * 0.5 + self.recency * late)
    }

    /// Per-post decoy probability for negative users.
    pub fn decoy_probability(&self) -> f64 {
        // Average of `signal_probability` over positions, one quarter being late.
        let mean_signal = self.signal_strength * ((1.0 - self.recency) * 0.5 + self.recency * 0.25);
        let kinds = if self.emotion_signal { 2.0 } else { 1.0 };
        (self.decoy_rate * kinds * mean_signal).min(1.0)
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Corpus, DatasetError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = EmotionLexicon::default();
    let target = lexicon.index_of(&spec.target_emotion).expect("validated above");
    let target_words = lexicon.words_for(target);
    let emotion_words: Vec<Vec<&str>> = (0..lexicon.names().len()).map(|e| lexicon.words_for(e)).collect();

    let variance_ratio = (spec.std_posts / spec.mean_posts).powi(2);
    let sigma = (1.0 + variance_ratio).ln().sqrt();
    let mu = spec.mean_posts.ln() - sigma * sigma / 2.0;
    let post_count = LogNormal::new(mu, sigma).map_err(|e| DatasetError::Config(e.to_string()))?;
    let gap = Exp::new(1.0 / (spec.mean_gap_hours * 3600.0)).map_err(|e| DatasetError::Config(e.to_string()))?;
    let burst = Exp::new(1.0 / (spec.burst_gap_hours * 3600.0)).map_err(|e| DatasetError::Config(e.to_string()))?;

    let mut labels: Vec<u8> = (0..spec.users).map(|i| u8::from(i < spec.positives)).collect();
    labels.shuffle(&mut rng);

    let mut users = Vec::with_capacity(spec.users);
    for (i, &label) in labels.iter().enumerate() {
        let n = (post_count.sample(&mut rng).round() as usize).clamp(spec.min_posts, spec.max_posts);
        let mut t = spec.start_timestamp + rng.gen_range(0..365 * 86_400);
        let mut posts = Vec::with_capacity(n);
        for j in 0..n {
            let signal = label == 1 && rng.gen::<f64>() < spec.signal_probability(j, n);
            let decoy = label == 0 && rng.gen::<f64>() < spec.decoy_probability();
            if j > 0 {
                let dt = if signal {
                    burst.sample(&mut rng)
                } else {
                    gap.sample(&mut rng)
                };
                t += dt.round() as i64;
            }
            let k = rng.gen_range(spec.min_tokens..=spec.max_tokens);
            let mut tokens: Vec<String> = (0..k)
                .map(|_| filler_word(rng.gen_range(0..spec.filler_vocabulary)))
                .collect();
            if rng.gen::<f64>() < spec.background_rate {
                tokens.push((*GAMBLING_LEXICON.choose(&mut rng).unwrap()).to_owned());
            }
            if rng.gen::<f64>() < spec.emotion_noise_rate {
                let words = emotion_words.choose(&mut rng).unwrap();
                tokens.push((*words.choose(&mut rng).unwrap()).to_owned());
            }
            // A decoy carries one of the two signal kinds, never both.
            let (gambling, emotional) = match (signal, decoy) {
                (true, _) => (true, spec.emotion_signal),
                (false, true) if spec.emotion_signal => {
                    let g = rng.gen::<bool>();
                    (g, !g)
                }
                (false, true) => (true, false),
                (false, false) => (false, false),
            };
            if gambling {
                for _ in 0..rng.gen_range(1..=2) {
                    tokens.push((*GAMBLING_LEXICON.choose(&mut rng).unwrap()).to_owned());
                }
            }
            if emotional {
                for _ in 0..rng.gen_range(1..=2) {
                    tokens.push((*target_words.choose(&mut rng).unwrap()).to_owned());
                }
            }
            tokens.shuffle(&mut rng);
            posts.push(Post::new(tokens.join(" "), t));
        }
        users.push(UserRecord::new(format!("user_{i:05}"), posts, label)?);
    }
    Corpus::new(users)
}
