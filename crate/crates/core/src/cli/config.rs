//! The engine's TOML manifest. Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{generate_synthetic, Corpus, SplitFractions, SyntheticSpec};
use crate::encoders::{EmbeddingStore, EmotionEncoder, EmotionLexicon, HashingEncoder, TextEncoder};
use crate::model::{Architecture, ModelConfig, Pooling, DEFAULT_HIDDEN};
use crate::training::TrainConfig;

use super::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub dataset: DatasetSection,
    pub encoder: EncoderSection,
    pub model: ModelSection,
    pub training: TrainConfig,
    pub evaluation: EvaluationSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Corpus JSONL; when absent the corpus is generated from `generator`.
    pub path: Option<PathBuf>,
    pub generator: SyntheticSpec,
    pub generator_seed: u64,
    pub fractions: SplitFractions,
    /// Balance classes before splitting, seeded by the run seed.
    pub downsample: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderMode {
    #[default]
    Hashing,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub mode: EncoderMode,
    pub d_text: usize,
    pub hash_seed: u64,
    /// Replaces the built-in emotion lexicon.
    pub lexicon: Option<PathBuf>,
    /// Interchange file; required in `file` mode and forbidden otherwise.
    pub store: Option<PathBuf>,
}

impl Default for EncoderSection {
    fn default() -> Self {
        Self {
            mode: EncoderMode::Hashing,
            d_text: 64,
            hash_seed: 0,
            lexicon: None,
            store: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub architecture: Architecture,
    pub hidden_size: usize,
    /// Defaults per architecture when absent.
    pub dropout_rate: Option<f64>,
    pub pooling: Pooling,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            architecture: Architecture::EmoLstmTdA,
            hidden_size: DEFAULT_HIDDEN,
            dropout_rate: None,
            pooling: Pooling::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub seeds: Vec<u64>,
    /// Compared in listed order, consecutive pairs.
    pub architectures: Vec<Architecture>,
    pub workers: usize,
    pub top_k: Option<usize>,
    pub out_dir: PathBuf,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            seeds: (0..10).collect(),
            architectures: Vec::new(),
            workers: 1,
            top_k: None,
            out_dir: PathBuf::from("."),
        }
    }
}

/// What a command needs from the manifest beyond the common sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requirement {
    Generate,
    Train,
    Evaluate,
    Compare,
    Attention,
}

pub const MIN_COMPARE_SEEDS: usize = 5;

impl EngineConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Reads and parses `path`, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.dataset.path.as_mut().map(fix);
        self.encoder.lexicon.as_mut().map(fix);
        self.encoder.store.as_mut().map(fix);
        self.training.checkpoint_path.as_mut().map(fix);
        fix(&mut self.evaluation.out_dir);
    }

    pub fn model_config(&self) -> ModelConfig {
        self.model_config_for(self.model.architecture)
    }

    pub fn model_config_for(&self, architecture: Architecture) -> ModelConfig {
        let mut m = ModelConfig::new(architecture, self.encoder.d_text)
            .with_hidden(self.model.hidden_size)
            .with_pooling(self.model.pooling);
        if let Some(rate) = self.model.dropout_rate {
            if architecture.uses_dropout() {
                m = m.with_dropout(rate);
            }
        }
        m
    }

    /// Checks everything `requirement` depends on, touching no output.
    pub fn validate(&self, requirement: Requirement) -> Result<(), CliError> {
        let config = |m: String| Err(CliError::Config(m));
        let exists = |what: &str, p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{what} `{}` does not exist", p.display())))
            }
        };
        if requirement == Requirement::Generate {
            return self
                .dataset
                .generator
                .validate()
                .map_err(|e| CliError::Config(e.to_string()));
        }
        match &self.dataset.path {
            Some(p) => exists("dataset.path", p)?,
            None => self
                .dataset
                .generator
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?,
        }
        self.dataset
            .fractions
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        match (self.encoder.mode, &self.encoder.store) {
            (EncoderMode::File, None) => return config("encoder.mode = \"file\" needs encoder.store".into()),
            (EncoderMode::Hashing, Some(_)) => {
                return config("encoder.store is only valid with encoder.mode = \"file\"".into())
            }
            (EncoderMode::File, Some(p)) => exists("encoder.store", p)?,
            (EncoderMode::Hashing, None) => {}
        }
        if let Some(p) = &self.encoder.lexicon {
            exists("encoder.lexicon", p)?;
        }
        let architectures = if requirement == Requirement::Compare {
            if self.evaluation.architectures.len() < 2 {
                return config("compare needs at least 2 architectures".into());
            }
            if self.evaluation.seeds.len() < MIN_COMPARE_SEEDS {
                return config(format!("compare needs at least {MIN_COMPARE_SEEDS} seeds"));
            }
            self.evaluation.architectures.clone()
        } else {
            vec![self.model.architecture]
        };
        for arch in architectures {
            if self.encoder.mode == EncoderMode::File && arch == Architecture::TextBaseline {
                return config("TextBaseline needs encoder.mode = \"hashing\"".into());
            }
            self.model_config_for(arch)
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(rate) = self.model.dropout_rate {
            if !(0.0..1.0).contains(&rate) {
                return config(format!("model.dropout_rate {rate} must lie in [0, 1)"));
            }
        }
        self.training.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.evaluation.workers == 0 {
            return config("evaluation.workers must be at least 1".into());
        }
        if self.evaluation.seeds.is_empty() {
            return config("evaluation.seeds must not be empty".into());
        }
        if requirement == Requirement::Attention && !self.model_config().use_attention {
            return config(format!("{} has no attention layer", self.model.architecture));
        }
        if self.evaluation.top_k == Some(0) {
            return config("evaluation.top_k must be at least 1".into());
        }
        Ok(())
    }

    /// The configured corpus, read from `dataset.path` or generated.
    pub fn load_corpus(&self) -> Result<Corpus, CliError> {
        match &self.dataset.path {
            Some(p) => read_corpus(p),
            None => Ok(generate_synthetic(
                &self.dataset.generator,
                self.dataset.generator_seed,
            )?),
        }
    }

    pub fn encoders(&self) -> Result<Encoders, CliError> {
        let lexicon = match &self.encoder.lexicon {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                EmotionLexicon::parse(&text)?
            }
            None => EmotionLexicon::default(),
        };
        let (text, store): (Box<dyn TextEncoder>, Option<EmbeddingStore>) =
            match (&self.encoder.mode, &self.encoder.store) {
                (EncoderMode::File, Some(p)) => {
                    let store = EmbeddingStore::load(p)?;
                    if store.width() != self.encoder.d_text {
                        return Err(CliError::Config(format!(
                            "store width {} differs from encoder.d_text {}",
                            store.width(),
                            self.encoder.d_text
                        )));
                    }
                    (Box::new(store.clone()), Some(store))
                }
                _ => (
                    Box::new(HashingEncoder::new(self.encoder.d_text, self.encoder.hash_seed)?),
                    None,
                ),
            };
        let emotion: Box<dyn EmotionEncoder> = match store {
            Some(s) if s.has_emotion() => Box::new(s),
            _ => Box::new(lexicon),
        };
        Ok(Encoders { text, emotion })
    }
}

pub struct Encoders {
    pub text: Box<dyn TextEncoder>,
    pub emotion: Box<dyn EmotionEncoder>,
}

pub fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(Corpus::from_jsonl_reader(std::io::BufReader::new(file))?)
}
