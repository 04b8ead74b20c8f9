use std::collections::HashMap;

use super::hashing::tokenize;
use super::{EmotionEncoder, EncoderError};
use crate::dataset::EMOTION_DIM;

pub const DEFAULT_EMOTIONS: [&str; EMOTION_DIM] = ["anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"];

const DEFAULT_WORDS: [&[&str]; EMOTION_DIM] = [
    &["angry", "furious", "rage", "hate", "mad", "annoyed", "livid", "pissed"],
    &[
        "disgusting",
        "gross",
        "sick",
        "revolting",
        "nasty",
        "ashamed",
        "shame",
        "vile",
    ],
    &[
        "afraid",
        "scared",
        "terrified",
        "anxious",
        "panic",
        "worried",
        "fear",
        "dread",
    ],
    &[
        "happy", "excited", "glad", "great", "awesome", "love", "thrilled", "lucky",
    ],
    &["okay", "fine", "normal", "whatever", "usual", "meh", "plain", "routine"],
    &[
        "sad",
        "hopeless",
        "guilty",
        "depressed",
        "miserable",
        "regret",
        "lonely",
        "broke",
    ],
    &[
        "surprised",
        "shocked",
        "unexpected",
        "wow",
        "unbelievable",
        "sudden",
        "stunned",
        "whoa",
    ],
];

/// Token-to-emotion lookup over seven named emotions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmotionLexicon {
    names: Vec<String>,
    tokens: HashMap<String, usize>,
}

impl Default for EmotionLexicon {
    fn default() -> Self {
        let entries = DEFAULT_WORDS
            .iter()
            .enumerate()
            .flat_map(|(e, words)| words.iter().map(move |w| ((*w).to_owned(), e)));
        Self::new(DEFAULT_EMOTIONS.iter().map(|s| (*s).to_owned()).collect(), entries)
            .expect("default lexicon is valid")
    }
}

impl EmotionLexicon {
    pub fn new(names: Vec<String>, entries: impl IntoIterator<Item = (String, usize)>) -> Result<Self, EncoderError> {
        if names.len() != EMOTION_DIM {
            return Err(EncoderError::Lexicon(format!(
                "expected {EMOTION_DIM} emotion names, got {}",
                names.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(EncoderError::Lexicon(format!("duplicate emotion name `{n}`")));
            }
        }
        let mut tokens = HashMap::new();
        for (token, idx) in entries {
            if idx >= EMOTION_DIM {
                return Err(EncoderError::Lexicon(format!(
                    "token `{token}` maps to emotion index {idx}"
                )));
            }
            tokens.insert(token.to_lowercase(), idx);
        }
        Ok(Self { names, tokens })
    }

    /// Parses `token<TAB>emotion_name` lines against the default emotion names.
    /// `#` starts a comment line.
    pub fn parse(input: &str) -> Result<Self, EncoderError> {
        let base = Self::default();
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, name) = line.split_once('\t').ok_or_else(|| EncoderError::Parse {
                line: i + 1,
                message: "expected `token<TAB>emotion`".into(),
            })?;
            let idx = base.index_of(name.trim()).ok_or_else(|| EncoderError::Parse {
                line: i + 1,
                message: format!("unknown emotion `{}`", name.trim()),
            })?;
            entries.push((token.trim().to_owned(), idx));
        }
        Self::new(base.names, entries)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.tokens.get(token).copied()
    }

    /// Tokens assigned to `emotion`, sorted.
    pub fn words_for(&self, emotion: usize) -> Vec<&str> {
        let mut words: Vec<&str> = self
            .tokens
            .iter()
            .filter(|(_, &e)| e == emotion)
            .map(|(w, _)| w.as_str())
            .collect();
        words.sort_unstable();
        words
    }

    /// Hit frequencies mixed with a uniform 1/7 floor and renormalized:
    /// `p_e = (hits_e / total + 1/7) / 2`, or uniform when there are no hits.
    pub fn scores(&self, text: &str) -> Vec<f64> {
        let mut counts = [0usize; EMOTION_DIM];
        for token in tokenize(text) {
            if let Some(e) = self.lookup(&token) {
                counts[e] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        let uniform = 1.0 / EMOTION_DIM as f64;
        if total == 0 {
            return vec![uniform; EMOTION_DIM];
        }
        let mut p: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64 + uniform).collect();
        let sum: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= sum);
        p
    }
}

impl EmotionEncoder for EmotionLexicon {
    fn encode_post(&self, _user: &str, _index: usize, text: &str) -> Result<Vec<f64>, EncoderError> {
        Ok(self.scores(text))
    }
}
