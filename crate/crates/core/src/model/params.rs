use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::EMOTION_DIM;
use crate::numeric::{DenseArray, ParameterSet};

use super::{ModelConfig, ModelError};

pub const TEXT_W_X: &str = "text.w_x";
pub const TEXT_W_H: &str = "text.w_h";
pub const TEXT_B: &str = "text.b";
pub const EMOTION_W_X: &str = "emotion.w_x";
pub const EMOTION_W_H: &str = "emotion.w_h";
pub const EMOTION_B: &str = "emotion.b";
pub const ATTN_W: &str = "attn.w";
pub const ATTN_B: &str = "attn.b";
pub const ATTN_V: &str = "attn.v";
pub const HEAD_W: &str = "head.w";
pub const HEAD_B: &str = "head.b";

/// Parameter names, shapes and init bounds, in initialization order.
pub fn parameter_layout(config: &ModelConfig) -> Vec<(&'static str, Vec<usize>, f64)> {
    let h = config.hidden_size;
    let rec_bound = 1.0 / (h as f64).sqrt();
    let mut layout = Vec::new();
    let Some(cell) = config.architecture.cell() else {
        let bound = 1.0 / (config.d_text as f64).sqrt();
        layout.push((HEAD_W, vec![config.d_text, 2], bound));
        layout.push((HEAD_B, vec![2], bound));
        return layout;
    };
    let gh = cell.gates() * h;
    layout.push((TEXT_W_X, vec![config.d_text, gh], rec_bound));
    layout.push((TEXT_W_H, vec![h, gh], rec_bound));
    layout.push((TEXT_B, vec![gh], rec_bound));
    if config.use_emotion {
        layout.push((EMOTION_W_X, vec![EMOTION_DIM, gh], rec_bound));
        layout.push((EMOTION_W_H, vec![h, gh], rec_bound));
        layout.push((EMOTION_B, vec![gh], rec_bound));
    }
    if config.use_attention {
        layout.push((ATTN_W, vec![h, h], rec_bound));
        layout.push((ATTN_B, vec![h], rec_bound));
        layout.push((ATTN_V, vec![h], rec_bound));
    }
    layout.push((HEAD_W, vec![h, 2], rec_bound));
    layout.push((HEAD_B, vec![2], rec_bound));
    layout
}

/// Uniform `[-bound, bound]` initialization drawn from `config.init_seed`.
pub fn init_params(config: &ModelConfig) -> Result<ParameterSet, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    let mut params = ParameterSet::new();
    for (name, shape, bound) in parameter_layout(config) {
        let dist = Uniform::new_inclusive(-bound, bound);
        let n = shape.iter().product();
        let data = (0..n).map(|_| dist.sample(&mut rng)).collect();
        params.insert(name, DenseArray::new(shape, data)?);
    }
    Ok(params)
}

/// Ensures `params` holds exactly the layout of `config`.
pub fn check_params(config: &ModelConfig, params: &ParameterSet) -> Result<(), ModelError> {
    let layout = parameter_layout(config);
    if layout.len() != params.len() {
        return Err(ModelError::Config(format!(
            "{} expects {} parameters, found {}",
            config.architecture,
            layout.len(),
            params.len()
        )));
    }
    for (name, shape, _) in layout {
        match params.get(name) {
            Some(p) if p.shape() == shape.as_slice() => {}
            Some(p) => {
                return Err(ModelError::Config(format!(
                    "parameter `{name}` has shape {:?}, expected {shape:?}",
                    p.shape()
                )))
            }
            None => return Err(ModelError::Config(format!("missing parameter `{name}`"))),
        }
    }
    Ok(())
}
