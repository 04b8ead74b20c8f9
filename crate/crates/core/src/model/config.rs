use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::recurrent::CellKind;
use super::ModelError;

pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_GRU_DROPOUT: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Architecture {
    TextBaseline,
    #[serde(rename = "GRUd")]
    GruD,
    #[serde(rename = "GRUdTd")]
    GruDTd,
    /// Plain LSTM, the non-decay counterpart of `LSTMTd`.
    #[serde(rename = "LSTM")]
    Lstm,
    #[serde(rename = "LSTMTd")]
    LstmTd,
    #[serde(rename = "LSTMTdA")]
    LstmTdA,
    #[serde(rename = "EmoLSTMTd")]
    EmoLstmTd,
    #[serde(rename = "EmoLSTMTdA")]
    EmoLstmTdA,
}

impl Architecture {
    pub const ALL: [Architecture; 8] = [
        Architecture::TextBaseline,
        Architecture::GruD,
        Architecture::GruDTd,
        Architecture::Lstm,
        Architecture::LstmTd,
        Architecture::LstmTdA,
        Architecture::EmoLstmTd,
        Architecture::EmoLstmTdA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::TextBaseline => "TextBaseline",
            Architecture::GruD => "GRUd",
            Architecture::GruDTd => "GRUdTd",
            Architecture::Lstm => "LSTM",
            Architecture::LstmTd => "LSTMTd",
            Architecture::LstmTdA => "LSTMTdA",
            Architecture::EmoLstmTd => "EmoLSTMTd",
            Architecture::EmoLstmTdA => "EmoLSTMTdA",
        }
    }

    /// `None` for the concatenation baseline, which has no recurrence.
    pub fn cell(self) -> Option<CellKind> {
        match self {
            Architecture::TextBaseline => None,
            Architecture::GruD | Architecture::GruDTd => Some(CellKind::Gru),
            _ => Some(CellKind::Lstm),
        }
    }

    pub fn uses_decay(self) -> bool {
        matches!(
            self,
            Architecture::GruDTd
                | Architecture::LstmTd
                | Architecture::LstmTdA
                | Architecture::EmoLstmTd
                | Architecture::EmoLstmTdA
        )
    }

    pub fn uses_emotion(self) -> bool {
        matches!(self, Architecture::EmoLstmTd | Architecture::EmoLstmTdA)
    }

    pub fn uses_attention(self) -> bool {
        matches!(self, Architecture::LstmTdA | Architecture::EmoLstmTdA)
    }

    pub fn uses_dropout(self) -> bool {
        self.cell() == Some(CellKind::Gru)
    }

    pub fn code(self) -> u8 {
        Self::ALL.iter().position(|&a| a == self).expect("listed") as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::Config(format!("unknown architecture `{s}`")))
    }
}

/// Sequence reduction used when attention is off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Mean,
    Last,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    /// Text vector width; for the baseline, the width of the concatenation vector.
    pub d_text: usize,
    pub hidden_size: usize,
    pub dropout_rate: f64,
    pub use_decay: bool,
    pub use_emotion: bool,
    pub use_attention: bool,
    pub pooling: Pooling,
    pub init_seed: u64,
}

impl ModelConfig {
    /// Flags and dropout follow the architecture.
    pub fn new(architecture: Architecture, d_text: usize) -> Self {
        Self {
            architecture,
            d_text,
            hidden_size: DEFAULT_HIDDEN,
            dropout_rate: if architecture.uses_dropout() {
                DEFAULT_GRU_DROPOUT
            } else {
                0.0
            },
            use_decay: architecture.uses_decay(),
            use_emotion: architecture.uses_emotion(),
            use_attention: architecture.uses_attention(),
            pooling: Pooling::Mean,
            init_seed: 0,
        }
    }

    pub fn with_hidden(mut self, hidden_size: usize) -> Self {
        self.hidden_size = hidden_size;
        self
    }

    pub fn with_seed(mut self, init_seed: u64) -> Self {
        self.init_seed = init_seed;
        self
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout_rate = rate;
        self
    }

    pub fn with_pooling(mut self, pooling: Pooling) -> Self {
        self.pooling = pooling;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let a = self.architecture;
        if self.hidden_size == 0 {
            return Err(ModelError::Config("hidden_size must be at least 1".into()));
        }
        if self.d_text == 0 {
            return Err(ModelError::Config("d_text must be at least 1".into()));
        }
        if self.use_decay != a.uses_decay()
            || self.use_emotion != a.uses_emotion()
            || self.use_attention != a.uses_attention()
        {
            return Err(ModelError::Config(format!(
                "flags decay={} emotion={} attention={} do not match {a}",
                self.use_decay, self.use_emotion, self.use_attention
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(ModelError::Config(format!(
                "dropout_rate {} must lie in [0, 1)",
                self.dropout_rate
            )));
        }
        if self.dropout_rate > 0.0 && !a.uses_dropout() {
            return Err(ModelError::Config(format!("{a} does not use dropout")));
        }
        Ok(())
    }
}
