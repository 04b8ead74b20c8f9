#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskseq::dataset::{pad_and_mask, EncodedBatch, EncodedUser};
use riskseq::model::{backward, forward, init_params, Architecture, Mode, ModelConfig};
use riskseq::numeric::{bce_loss, DenseArray, ParameterSet};

pub const FD_STEP: f64 = 1e-5;

/// Random user of length `len` with unit-ish text features, simplex emotions
/// and decay factors in (0, 1].
pub fn random_user(rng: &mut ChaCha8Rng, len: usize, d_text: usize) -> EncodedUser {
    let text = (0..len * d_text).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut emotion = Vec::with_capacity(len * 7);
    for _ in 0..len {
        let raw: Vec<f64> = (0..7).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        emotion.extend(raw.iter().map(|v| v / s));
    }
    let mut decay = vec![1.0];
    decay.extend((1..len).map(|_| rng.gen_range(0.05..1.0)));
    EncodedUser {
        text: DenseArray::new(vec![len, d_text], text).unwrap(),
        emotion: DenseArray::new(vec![len, 7], emotion).unwrap(),
        decay,
        label: rng.gen_range(0..2),
    }
}

/// A `b=2, L=3` batch whose second row is one step shorter.
pub fn grad_check_batch(seed: u64, d_text: usize, baseline: bool) -> EncodedBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lens = if baseline { [1, 1] } else { [3, 2] };
    let mut users: Vec<EncodedUser> = lens.iter().map(|&l| random_user(&mut rng, l, d_text)).collect();
    users[0].label = 0;
    users[1].label = 1;
    pad_and_mask(&users, if baseline { None } else { Some(3) }).unwrap()
}

fn loss(config: &ModelConfig, params: &ParameterSet, batch: &EncodedBatch, mode: Mode) -> f64 {
    let t = forward(config, params, batch, mode).unwrap();
    bce_loss(&t.y, &batch.labels).unwrap().value()
}

/// Maximum relative error `|a − n| / max(|a|, |n|, 1e-6)` between analytic and
/// central-difference gradients over every parameter element.
pub fn max_relative_error(config: &ModelConfig, batch: &EncodedBatch, mode: Mode) -> f64 {
    let params = init_params(config).unwrap();
    let trace = forward(config, &params, batch, mode).unwrap();
    let grads = backward(config, &params, batch, &trace, &batch.labels).unwrap();
    let names: Vec<String> = params.names().map(str::to_owned).collect();
    let mut worst = 0.0f64;
    for name in names {
        let analytic = grads.get(&name).unwrap_or_else(|| panic!("no gradient for {name}"));
        for i in 0..analytic.len() {
            let mut plus = params.clone();
            plus.get_mut(&name).unwrap().data_mut()[i] += FD_STEP;
            let mut minus = params.clone();
            minus.get_mut(&name).unwrap().data_mut()[i] -= FD_STEP;
            let numeric = (loss(config, &plus, batch, mode) - loss(config, &minus, batch, mode)) / (2.0 * FD_STEP);
            let a = analytic.data()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}

pub fn grad_config(architecture: Architecture, seed: u64) -> ModelConfig {
    ModelConfig::new(architecture, 5).with_hidden(4).with_seed(seed)
}

/// Dropout is exercised with a fixed mask.
pub fn grad_mode(seed: u64) -> Mode {
    Mode::Train { seed: seed ^ 0xD0 }
}
