use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::UserRecord;
use crate::encoders::{EmotionEncoder, TextEncoder};
use crate::model::{forward, Mode, ModelConfig};
use crate::numeric::ParameterSet;
use crate::pipeline::{encode_users, make_batches};
use crate::training::TrainError;

use super::experiment::RunError;
use super::EvaluationError;

pub const EXCERPT_CHARS: usize = 200;
pub const ELLIPSIS: char = '…';

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionEntry {
    pub post_index: usize,
    pub excerpt: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAttention {
    pub user_id: String,
    pub label: u8,
    pub posts: usize,
    /// Sorted by descending weight, ties by post index.
    pub entries: Vec<AttentionEntry>,
}

impl UserAttention {
    pub fn top_post(&self) -> Option<usize> {
        self.entries.first().map(|e| e.post_index)
    }
}

/// At most 200 characters; longer text keeps 199 and ends with `…`.
pub fn excerpt(text: &str) -> String {
    if text.chars().count() <= EXCERPT_CHARS {
        return text.to_owned();
    }
    let mut s: String = text.chars().take(EXCERPT_CHARS - 1).collect();
    s.push(ELLIPSIS);
    s
}

/// Ranked attention weights per user, truncated to `top_k` entries when given.
pub fn attention_report(
    config: &ModelConfig,
    params: &ParameterSet,
    users: &[UserRecord],
    text: &dyn TextEncoder,
    emotion: &dyn EmotionEncoder,
    top_k: Option<usize>,
) -> Result<Vec<UserAttention>, RunError> {
    if !config.use_attention {
        return Err(EvaluationError::Config(format!("{} has no attention layer", config.architecture)).into());
    }
    let encoded = encode_users(config, users, text, emotion)?;
    let order: Vec<usize> = (0..users.len()).collect();
    let mut out = Vec::with_capacity(users.len());
    for (chunk, batch) in order.chunks(32).zip(make_batches(&encoded, &order, 32, None)?) {
        let trace = forward(config, params, &batch, Mode::Eval).map_err(TrainError::from)?;
        for (row, &u) in chunk.iter().enumerate() {
            let user = &users[u];
            let weights = trace.attention_weights.row(row);
            let mut entries: Vec<AttentionEntry> = user
                .posts()
                .iter()
                .enumerate()
                .map(|(i, p)| AttentionEntry {
                    post_index: i,
                    excerpt: excerpt(&p.text),
                    weight: weights[i],
                })
                .collect();
            entries.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.post_index.cmp(&b.post_index)));
            if let Some(k) = top_k {
                entries.truncate(k);
            }
            out.push(UserAttention {
                user_id: user.user_id().to_owned(),
                label: user.label(),
                posts: user.len(),
                entries,
            });
        }
    }
    Ok(out)
}

pub fn write_attention_jsonl<W: Write>(report: &[UserAttention], mut out: W) -> std::io::Result<()> {
    for user in report {
        serde_json::to_writer(&mut out, user)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
