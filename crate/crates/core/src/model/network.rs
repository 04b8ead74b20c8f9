//! Architecture assembly: text stream, optional emotion stream and fusion,
//! optional time decay, pooling, and the two-way softmax head.
//!
//! The forward pass is split into [`forward_streams`] and [`forward_head`] so
//! callers can substitute stream outputs between the two stages.

use crate::dataset::{EncodedBatch, EMOTION_DIM};
use crate::numeric::{
    affine, affine_backward, bce_softmax_backward, dropout_mask, softmax, DenseArray, Gradients, ParameterSet,
};

use super::params::*;
use super::pooling::{attention_pool, last_pool, mean_pool, pool_backward, AttentionWeights, Pooled};
use super::recurrent::{recurrent_backward, recurrent_forward, RecurrentCache, RecurrentWeights};
use super::{check_params, ModelConfig, ModelError, Pooling};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout masks are drawn from `seed`.
    Train {
        seed: u64,
    },
}

/// Recurrent stream outputs, before fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct Streams {
    /// `b×L×h`, after dropout when training.
    pub h_text: DenseArray,
    /// `b×L×h` when the emotion stream is enabled.
    pub h_emotion: Option<DenseArray>,
    raw_text: DenseArray,
    text_cache: Option<RecurrentCache>,
    emotion_cache: Option<(DenseArray, RecurrentCache)>,
    dropout: Option<Vec<f64>>,
}

impl Streams {
    /// Replaces the emotion stream output. Backward still uses the cached
    /// emotion activations, so a trace built this way is for inference only.
    pub fn override_emotion(&mut self, h_emotion: DenseArray) -> Result<(), ModelError> {
        if self.h_emotion.is_none() || h_emotion.shape() != self.h_text.shape() {
            return Err(ModelError::Dimension(format!(
                "emotion override {:?} for text stream {:?}",
                h_emotion.shape(),
                self.h_text.shape()
            )));
        }
        self.h_emotion = Some(h_emotion);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub h_text: DenseArray,
    pub h_emotion: Option<DenseArray>,
    pub h_fused: DenseArray,
    pub h_combined: DenseArray,
    /// `b×h` (`b×d_text` for the baseline).
    pub att_out: DenseArray,
    /// `b×L`: attention weights, or the fixed pooling weights.
    pub attention_weights: DenseArray,
    /// `b×2` class probabilities.
    pub y: DenseArray,
    streams: Option<Streams>,
    pooled: Option<Pooled>,
    lengths: Vec<usize>,
}

impl ForwardTrace {
    pub fn positive_probabilities(&self) -> Vec<f64> {
        (0..self.y.shape()[0]).map(|i| self.y.row(i)[1]).collect()
    }

    pub fn predictions(&self) -> Vec<u8> {
        (0..self.y.shape()[0])
            .map(|i| u8::from(self.y.row(i)[1] > self.y.row(i)[0]))
            .collect()
    }
}

/// `H_text ⊙ H_emotion`.
pub fn fuse(h_text: &DenseArray, h_emotion: &DenseArray) -> Result<DenseArray, ModelError> {
    h_text
        .hadamard(h_emotion)
        .map_err(|_| ModelError::Dimension(format!("fuse {:?} with {:?}", h_text.shape(), h_emotion.shape())))
}

/// Scales each timestep of a `b×L×h` tensor by its `b×L` decay factor.
pub fn apply_decay(h: &DenseArray, decay: &DenseArray) -> Result<DenseArray, ModelError> {
    if h.ndim() != 3 || decay.shape() != &h.shape()[..2] {
        return Err(ModelError::Dimension(format!(
            "decay {:?} for states {:?}",
            decay.shape(),
            h.shape()
        )));
    }
    if let Some(bad) = decay.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(ModelError::Validation(format!("decay factor {bad} outside [0, 1]")));
    }
    Ok(scale_rows(h, decay))
}

fn scale_rows(h: &DenseArray, factors: &DenseArray) -> DenseArray {
    let mut out = h.clone();
    for (row, &f) in factors.data().iter().enumerate() {
        out.row_mut(row).iter_mut().for_each(|v| *v *= f);
    }
    out
}

fn param<'a>(params: &'a ParameterSet, name: &str) -> Result<&'a DenseArray, ModelError> {
    params
        .get(name)
        .ok_or_else(|| ModelError::Config(format!("missing parameter `{name}`")))
}

fn text_weights<'a>(config: &ModelConfig, params: &'a ParameterSet) -> Result<RecurrentWeights<'a>, ModelError> {
    let kind = config
        .architecture
        .cell()
        .ok_or_else(|| ModelError::Config("baseline has no recurrent layer".into()))?;
    Ok(RecurrentWeights {
        kind,
        w_x: param(params, TEXT_W_X)?,
        w_h: param(params, TEXT_W_H)?,
        b: param(params, TEXT_B)?,
    })
}

fn emotion_weights<'a>(config: &ModelConfig, params: &'a ParameterSet) -> Result<RecurrentWeights<'a>, ModelError> {
    Ok(RecurrentWeights {
        w_x: param(params, EMOTION_W_X)?,
        w_h: param(params, EMOTION_W_H)?,
        b: param(params, EMOTION_B)?,
        ..text_weights(config, params)?
    })
}

fn attention_weights(params: &ParameterSet) -> Result<AttentionWeights<'_>, ModelError> {
    Ok(AttentionWeights {
        w: param(params, ATTN_W)?,
        b: param(params, ATTN_B)?,
        v: param(params, ATTN_V)?,
    })
}

fn check_batch(config: &ModelConfig, batch: &EncodedBatch) -> Result<(), ModelError> {
    let b = batch.lengths.len();
    let ok = batch.text.ndim() == 3
        && batch.emotion.ndim() == 3
        && batch.decay.ndim() == 2
        && batch.text.shape()[0] == b
        && batch.emotion.shape()[..2] == batch.text.shape()[..2]
        && batch.decay.shape() == &batch.text.shape()[..2]
        && batch.labels.len() == b;
    if !ok {
        return Err(ModelError::Dimension(format!(
            "inconsistent batch: text {:?}, emotion {:?}, decay {:?}, {} lengths",
            batch.text.shape(),
            batch.emotion.shape(),
            batch.decay.shape(),
            b
        )));
    }
    if batch.text_dim() != config.d_text {
        return Err(ModelError::Dimension(format!(
            "batch text width {} != model d_text {}",
            batch.text_dim(),
            config.d_text
        )));
    }
    if config.use_emotion && batch.emotion_dim() != EMOTION_DIM {
        return Err(ModelError::Dimension(format!(
            "emotion width {} != {EMOTION_DIM}",
            batch.emotion_dim()
        )));
    }
    Ok(())
}

/// Runs the recurrent layers.
pub fn forward_streams(
    config: &ModelConfig,
    params: &ParameterSet,
    batch: &EncodedBatch,
    mode: Mode,
) -> Result<Streams, ModelError> {
    check_params(config, params)?;
    check_batch(config, batch)?;
    let (raw_text, text_cache) = recurrent_forward(text_weights(config, params)?, &batch.text, &batch.lengths)?;
    let dropout = match mode {
        Mode::Train { seed } if config.dropout_rate > 0.0 => {
            Some(dropout_mask(raw_text.len(), config.dropout_rate, seed)?)
        }
        _ => None,
    };
    let h_text = match &dropout {
        Some(mask) => {
            let mut h = raw_text.clone();
            h.data_mut().iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
            h
        }
        None => raw_text.clone(),
    };
    let (h_emotion, emotion_cache) = if config.use_emotion {
        let (h, cache) = recurrent_forward(emotion_weights(config, params)?, &batch.emotion, &batch.lengths)?;
        (Some(h.clone()), Some((h, cache)))
    } else {
        (None, None)
    };
    Ok(Streams {
        h_text,
        h_emotion,
        raw_text,
        text_cache: Some(text_cache),
        emotion_cache,
        dropout,
    })
}

/// Fusion, decay, pooling and the classifier head.
pub fn forward_head(
    config: &ModelConfig,
    params: &ParameterSet,
    batch: &EncodedBatch,
    streams: Streams,
) -> Result<ForwardTrace, ModelError> {
    check_batch(config, batch)?;
    let h_fused = match &streams.h_emotion {
        Some(he) => fuse(&streams.h_text, he)?,
        None => streams.h_text.clone(),
    };
    let h_combined = if config.use_decay {
        apply_decay(&h_fused, &batch.decay)?
    } else {
        h_fused.clone()
    };
    let pooled = if config.use_attention {
        attention_pool(&h_combined, &batch.lengths, attention_weights(params)?)?
    } else {
        match config.pooling {
            Pooling::Mean => mean_pool(&h_combined, &batch.lengths)?,
            Pooling::Last => last_pool(&h_combined, &batch.lengths)?,
        }
    };
    let logits = affine(&pooled.output, param(params, HEAD_W)?, param(params, HEAD_B)?)?;
    Ok(ForwardTrace {
        h_text: streams.h_text.clone(),
        h_emotion: streams.h_emotion.clone(),
        h_fused,
        h_combined,
        att_out: pooled.output.clone(),
        attention_weights: pooled.weights.clone(),
        y: softmax(&logits),
        streams: Some(streams),
        pooled: Some(pooled),
        lengths: batch.lengths.clone(),
    })
}

/// Full forward pass. The baseline reads one concatenation vector per row
/// from `batch.text[:, 0, :]`.
pub fn forward(
    config: &ModelConfig,
    params: &ParameterSet,
    batch: &EncodedBatch,
    mode: Mode,
) -> Result<ForwardTrace, ModelError> {
    if config.architecture.cell().is_none() {
        return baseline_forward(config, params, batch);
    }
    let streams = forward_streams(config, params, batch, mode)?;
    forward_head(config, params, batch, streams)
}

fn baseline_rows(batch: &EncodedBatch) -> DenseArray {
    let (b, l, d) = (batch.text.shape()[0], batch.text.shape()[1], batch.text.shape()[2]);
    let mut rows = DenseArray::zeros(&[b, d]);
    for r in 0..b {
        rows.row_mut(r).copy_from_slice(batch.text.row(r * l));
    }
    rows
}

fn baseline_forward(
    config: &ModelConfig,
    params: &ParameterSet,
    batch: &EncodedBatch,
) -> Result<ForwardTrace, ModelError> {
    check_params(config, params)?;
    check_batch(config, batch)?;
    let b = batch.lengths.len();
    let rows = baseline_rows(batch);
    let y = text_baseline_forward(params, &rows)?;
    let seq = DenseArray::new(vec![b, 1, config.d_text], rows.data().to_vec())?;
    Ok(ForwardTrace {
        h_text: seq.clone(),
        h_emotion: None,
        h_fused: seq.clone(),
        h_combined: seq,
        att_out: rows,
        attention_weights: DenseArray::filled(&[b, 1], 1.0),
        y,
        streams: None,
        pooled: None,
        lengths: vec![1; b],
    })
}

/// `softmax(x · W + b)` on `n×d` user vectors (or a single `d` vector).
pub fn text_baseline_forward(params: &ParameterSet, vectors: &DenseArray) -> Result<DenseArray, ModelError> {
    let w = param(params, HEAD_W)?;
    let b = param(params, HEAD_B)?;
    let rows = match vectors.ndim() {
        1 => DenseArray::new(vec![1, vectors.len()], vectors.data().to_vec())?,
        _ => vectors.clone(),
    };
    if rows.ndim() != 2 || rows.shape()[1] != w.shape()[0] {
        return Err(ModelError::Dimension(format!(
            "user vector {:?} for head {:?}",
            vectors.shape(),
            w.shape()
        )));
    }
    Ok(softmax(&affine(&rows, w, b)?))
}

/// Gradients of the mean loss with respect to every parameter.
pub fn backward(
    config: &ModelConfig,
    params: &ParameterSet,
    batch: &EncodedBatch,
    trace: &ForwardTrace,
    targets: &[u8],
) -> Result<Gradients, ModelError> {
    backward_with_inputs(config, params, batch, trace, targets, false).map(|(g, _)| g)
}

/// As [`backward`], also returning the gradient with respect to the text inputs.
pub fn backward_with_inputs(
    config: &ModelConfig,
    params: &ParameterSet,
    batch: &EncodedBatch,
    trace: &ForwardTrace,
    targets: &[u8],
    want_input_grad: bool,
) -> Result<(Gradients, Option<DenseArray>), ModelError> {
    check_params(config, params)?;
    check_batch(config, batch)?;
    let b = batch.lengths.len();
    if trace.y.shape() != [b, 2] || targets.len() != b {
        return Err(ModelError::Trace(format!(
            "trace for {} rows used with a batch of {b} and {} targets",
            trace.y.shape()[0],
            targets.len()
        )));
    }
    let mut grads = Gradients::new();
    let d_logits = bce_softmax_backward(&trace.y, targets)?;
    let (d_pooled, d_head_w, d_head_b) = affine_backward(&trace.att_out, param(params, HEAD_W)?, &d_logits)?;
    grads.insert(HEAD_W.into(), d_head_w);
    grads.insert(HEAD_B.into(), d_head_b);

    if config.architecture.cell().is_none() {
        let d_inputs = want_input_grad.then(|| {
            let l = batch.max_len();
            let mut d = DenseArray::zeros(batch.text.shape());
            for r in 0..b {
                d.row_mut(r * l).copy_from_slice(d_pooled.row(r));
            }
            d
        });
        return Ok((grads, d_inputs));
    }

    let (Some(streams), Some(pooled)) = (&trace.streams, &trace.pooled) else {
        return Err(ModelError::Trace("trace has no cached activations".into()));
    };
    if trace.lengths != batch.lengths || trace.h_combined.shape() != [b, batch.max_len(), config.hidden_size] {
        return Err(ModelError::Trace("trace was produced for a different batch".into()));
    }
    let attention = if config.use_attention {
        Some(attention_weights(params)?)
    } else {
        None
    };
    let pg = pool_backward(&trace.h_combined, &batch.lengths, pooled, attention, &d_pooled)?;
    if let (Some(w), Some(bb), Some(v)) = (pg.w, pg.b, pg.v) {
        grads.insert(ATTN_W.into(), w);
        grads.insert(ATTN_B.into(), bb);
        grads.insert(ATTN_V.into(), v);
    }
    let d_fused = if config.use_decay {
        scale_rows(&pg.states, &batch.decay)
    } else {
        pg.states
    };

    let mut d_text = d_fused.clone();
    if let Some((h_emotion, emotion_cache)) = &streams.emotion_cache {
        d_text = d_fused.hadamard(h_emotion)?;
        let d_emotion = d_fused.hadamard(&streams.h_text)?;
        let ew = emotion_weights(config, params)?;
        let eg = recurrent_backward(
            ew,
            &batch.emotion,
            &batch.lengths,
            h_emotion,
            emotion_cache,
            &d_emotion,
            false,
        )?;
        grads.insert(EMOTION_W_X.into(), eg.w_x);
        grads.insert(EMOTION_W_H.into(), eg.w_h);
        grads.insert(EMOTION_B.into(), eg.b);
    }
    if let Some(mask) = &streams.dropout {
        d_text.data_mut().iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
    }
    let text_cache = streams
        .text_cache
        .as_ref()
        .ok_or_else(|| ModelError::Trace("text stream cache missing".into()))?;
    let tg = recurrent_backward(
        text_weights(config, params)?,
        &batch.text,
        &batch.lengths,
        &streams.raw_text,
        text_cache,
        &d_text,
        want_input_grad,
    )?;
    grads.insert(TEXT_W_X.into(), tg.w_x);
    grads.insert(TEXT_W_H.into(), tg.w_h);
    grads.insert(TEXT_B.into(), tg.b);
    Ok((grads, tg.inputs))
}
