//! Mini-batch Adam training with validation-loss checkpointing.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, EncodedUser};
use crate::evaluation::classification_metrics;
use crate::model::{backward, forward, init_params, Mode, ModelConfig, ModelError};
use crate::numeric::{clip_global_norm, DenseArray, ParameterSet, LOG_CLAMP};
use crate::pipeline::make_batches;

pub use crate::model::{load_checkpoint, load_checkpoint_for, save_checkpoint};

pub const DEFAULT_EPOCHS: usize = 10;
pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training config: {0}")]
    Config(String),
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("non-finite loss at epoch {epoch}, batch {batch} (max |parameter| {max_parameter:e})")]
    NumericalAbort {
        epoch: usize,
        batch: usize,
        max_parameter: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    Constant,
    StepDecay {
        factor: f64,
        every_k_epochs: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub initial_lr: f64,
    pub schedule: Schedule,
    pub seed: u64,
    pub checkpoint_path: Option<PathBuf>,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Pad every batch to this length instead of its own longest user.
    pub pad_to: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            initial_lr: DEFAULT_LEARNING_RATE,
            schedule: Schedule::Constant,
            seed: 0,
            checkpoint_path: None,
            clip_norm: Some(DEFAULT_CLIP_NORM),
            pad_to: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let err = |m: String| Err(TrainError::Config(m));
        if self.epochs == 0 {
            return err("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return err("batch_size must be at least 1".into());
        }
        // Zero is allowed for frozen-parameter runs.
        if !(self.initial_lr >= 0.0 && self.initial_lr.is_finite()) {
            return err(format!(
                "initial_lr {} must be finite and non-negative",
                self.initial_lr
            ));
        }
        if let Schedule::StepDecay { factor, every_k_epochs } = self.schedule {
            if every_k_epochs == 0 || !(factor > 0.0 && factor.is_finite()) {
                return err(format!(
                    "step decay needs factor > 0 and k ≥ 1, got {factor}, {every_k_epochs}"
                ));
            }
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return err(format!("clip_norm {c} must be positive"));
            }
        }
        Ok(())
    }
}

pub fn lr_schedule(epoch: usize, config: &TrainConfig) -> f64 {
    match config.schedule {
        Schedule::Constant => config.initial_lr,
        Schedule::StepDecay { factor, every_k_epochs } => {
            config.initial_lr * factor.powi((epoch / every_k_epochs.max(1)) as i32)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_f1: f64,
    pub lr: f64,
}

impl EpochRecord {
    pub fn progress_line(&self) -> String {
        format!(
            "epoch {:>3}  train_loss {:.6}  val_loss {:.6}  val_f1 {:.4}  lr {:e}",
            self.epoch, self.train_loss, self.val_loss, self.val_f1, self.lr
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("history serializes")
    }
}

fn row_loss(y: &[f64], label: u8) -> f64 {
    -y[label as usize].clamp(LOG_CLAMP, 1.0 - LOG_CLAMP).ln()
}

/// Class probabilities (`n×2`) for `users`, in input order.
pub fn predict(
    config: &ModelConfig,
    params: &ParameterSet,
    users: &[EncodedUser],
    batch_size: usize,
) -> Result<DenseArray, TrainError> {
    let order: Vec<usize> = (0..users.len()).collect();
    let batches = make_batches(users, &order, batch_size, None)?;
    let outputs = batches
        .par_iter()
        .map(|b| forward(config, params, b, Mode::Eval).map(|t| t.y))
        .collect::<Result<Vec<_>, _>>()?;
    let data: Vec<f64> = outputs.into_iter().flat_map(DenseArray::into_data).collect();
    Ok(DenseArray::new(vec![users.len(), 2], data).expect("two columns per user"))
}

/// Mean loss and F1 of `params` on `users`.
pub fn evaluate_loss(
    config: &ModelConfig,
    params: &ParameterSet,
    users: &[EncodedUser],
    batch_size: usize,
) -> Result<(f64, f64), TrainError> {
    let y = predict(config, params, users, batch_size)?;
    let labels: Vec<u8> = users.iter().map(|u| u.label).collect();
    let loss = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| row_loss(y.row(i), l))
        .sum::<f64>()
        / users.len() as f64;
    let preds: Vec<u8> = (0..users.len()).map(|i| u8::from(y.row(i)[1] > y.row(i)[0])).collect();
    let f1 = classification_metrics(&preds, &labels).map(|m| m.f1).unwrap_or(0.0);
    Ok((loss, f1))
}

/// Trains from a fresh initialization and returns the parameters of the
/// epoch with the lowest validation loss.
pub fn train(
    config: &ModelConfig,
    tc: &TrainConfig,
    train_set: &[EncodedUser],
    val_set: &[EncodedUser],
) -> Result<(ParameterSet, TrainHistory), TrainError> {
    train_with_progress(config, tc, train_set, val_set, |_| {})
}

pub fn train_with_progress(
    config: &ModelConfig,
    tc: &TrainConfig,
    train_set: &[EncodedUser],
    val_set: &[EncodedUser],
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ParameterSet, TrainHistory), TrainError> {
    tc.validate()?;
    config.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptySet("training"));
    }
    if val_set.is_empty() {
        return Err(TrainError::EmptySet("validation"));
    }
    let mut params = init_params(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best: Option<(f64, ParameterSet)> = None;
    let mut history = TrainHistory {
        epochs: Vec::with_capacity(tc.epochs),
        best_epoch: 0,
    };
    let mut user_losses = vec![0.0; train_set.len()];

    for epoch in 0..tc.epochs {
        let lr = lr_schedule(epoch, tc);
        order.shuffle(&mut rng);
        let batches = make_batches(train_set, &order, tc.batch_size, tc.pad_to)?;
        for (bi, (batch, members)) in batches.iter().zip(order.chunks(tc.batch_size)).enumerate() {
            let mode = Mode::Train { seed: rng.gen() };
            let trace = forward(config, &params, batch, mode)?;
            for (row, &user) in members.iter().enumerate() {
                user_losses[user] = row_loss(trace.y.row(row), batch.labels[row]);
            }
            let abort = || TrainError::NumericalAbort {
                epoch,
                batch: bi,
                max_parameter: params.max_abs(),
            };
            if !trace.y.is_finite() {
                return Err(abort());
            }
            let mut grads = backward(config, &params, batch, &trace, &batch.labels)?;
            let norm = match tc.clip_norm {
                Some(c) => clip_global_norm(&mut grads, c),
                None => 0.0,
            };
            if !norm.is_finite() || grads.values().any(|g| !g.is_finite()) {
                return Err(abort());
            }
            params.adam_step(&grads, lr).map_err(ModelError::from)?;
        }
        // Summed in user order so the value does not depend on the shuffle.
        let train_loss = user_losses.iter().sum::<f64>() / train_set.len() as f64;
        let (val_loss, val_f1) = evaluate_loss(config, &params, val_set, tc.batch_size)?;
        if !val_loss.is_finite() {
            return Err(TrainError::NumericalAbort {
                epoch,
                batch: batches.len(),
                max_parameter: params.max_abs(),
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_f1,
            lr,
        };
        on_epoch(&record);
        history.epochs.push(record);
        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            history.best_epoch = epoch;
            if let Some(path) = &tc.checkpoint_path {
                save_checkpoint(&params, config, path)?;
            }
            best = Some((val_loss, params.clone()));
        }
    }
    let (_, best_params) = best.expect("at least one epoch");
    Ok((best_params, history))
}
