//! Named parameter storage with Adam moment state.

use std::collections::BTreeMap;

use super::{DenseArray, NumericError};

/// Gradients keyed by parameter name.
pub type Gradients = BTreeMap<String, DenseArray>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Slot {
    value: DenseArray,
    first_moment: DenseArray,
    second_moment: DenseArray,
}

/// Trainable parameters together with their Adam moments.
///
/// Moments are created alongside each parameter and always share its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    slots: BTreeMap<String, Slot>,
    step: u64,
    adam: AdamConfig,
}

impl Default for ParameterSet {
    fn default() -> Self {
        Self::new()
    }
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::with_adam(AdamConfig::default())
    }

    pub fn with_adam(adam: AdamConfig) -> Self {
        Self {
            slots: BTreeMap::new(),
            step: 0,
            adam,
        }
    }

    /// Inserts or replaces a parameter. Its moments are reset to zero.
    pub fn insert(&mut self, name: impl Into<String>, value: DenseArray) {
        let first_moment = DenseArray::zeros(value.shape());
        let second_moment = DenseArray::zeros(value.shape());
        self.slots.insert(
            name.into(),
            Slot {
                value,
                first_moment,
                second_moment,
            },
        );
    }

    pub fn get(&self, name: &str) -> Option<&DenseArray> {
        self.slots.get(name).map(|s| &s.value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut DenseArray> {
        self.slots.get_mut(name).map(|s| &mut s.value)
    }

    pub fn require(&self, name: &str) -> Result<&DenseArray, NumericError> {
        self.get(name)
            .ok_or_else(|| NumericError::UnknownParameter(name.to_owned()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.slots.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.slots.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DenseArray)> {
        self.slots.iter().map(|(k, s)| (k.as_str(), &s.value))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, name: &str) -> Option<&DenseArray> {
        self.slots.get(name).map(|s| &s.first_moment)
    }

    pub fn second_moment(&self, name: &str) -> Option<&DenseArray> {
        self.slots.get(name).map(|s| &s.second_moment)
    }

    pub fn max_abs(&self) -> f64 {
        self.slots.values().fold(0.0, |m, s| m.max(s.value.max_abs()))
    }

    /// Whether every parameter value is bit-identical to `other`'s (moments ignored).
    pub fn same_values(&self, other: &ParameterSet) -> bool {
        self.slots.len() == other.slots.len()
            && self.slots.iter().zip(&other.slots).all(|((ka, a), (kb, b))| {
                ka == kb
                    && a.value.shape() == b.value.shape()
                    && a.value
                        .data()
                        .iter()
                        .zip(b.value.data())
                        .all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }

    /// One bias-corrected Adam update. Parameters without a gradient entry
    /// still have their moments decayed. A step whose gradients are all zero
    /// decays the moments but leaves every value unchanged.
    pub fn adam_step(&mut self, gradients: &Gradients, learning_rate: f64) -> Result<(), NumericError> {
        for (name, grad) in gradients {
            let slot = self
                .slots
                .get(name)
                .ok_or_else(|| NumericError::UnknownParameter(name.clone()))?;
            slot.value.ensure_same_shape("adam_step", grad)?;
        }

        self.step += 1;
        let AdamConfig { beta1, beta2, epsilon } = self.adam;
        let t = self.step as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);
        let null_step = gradients.values().all(|g| g.data().iter().all(|&v| v == 0.0));

        for (name, slot) in self.slots.iter_mut() {
            let grad = gradients.get(name);
            let m = slot.first_moment.data_mut();
            let v = slot.second_moment.data_mut();
            let w = slot.value.data_mut();
            for i in 0..w.len() {
                let g = grad.map_or(0.0, |g| g.data()[i]);
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                if null_step {
                    continue;
                }
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                w[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(gradients: &mut Gradients, max_norm: f64) -> f64 {
    let norm = gradients.values().map(DenseArray::sum_squares).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let factor = max_norm / norm;
        gradients.values_mut().for_each(|g| g.scale_in_place(factor));
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_set(value: f64) -> ParameterSet {
        let mut p = ParameterSet::new();
        p.insert("w", DenseArray::vector(vec![value]));
        p
    }

    fn grad(value: f64) -> Gradients {
        let mut g = Gradients::new();
        g.insert("w".into(), DenseArray::vector(vec![value]));
        g
    }

    #[test]
    fn zero_gradient_leaves_values() {
        let mut p = scalar_set(0.3);
        p.adam_step(&grad(1.0), 0.01).unwrap();
        let before = p.get("w").unwrap().clone();
        let m_before = p.first_moment("w").unwrap().data()[0];
        p.adam_step(&grad(0.0), 0.01).unwrap();
        assert_eq!(p.get("w").unwrap(), &before);
        assert!(p.first_moment("w").unwrap().data()[0].abs() < m_before.abs());
        assert_eq!(p.step(), 2);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar_set(0.0);
        p.adam_step(&grad(1.0), 0.001).unwrap();
        let w = p.get("w").unwrap().data()[0];
        assert!((w + 0.001).abs() < 1e-10, "{w}");
    }

    #[test]
    fn repeated_gradient_gives_steady_update() {
        let mut p = scalar_set(0.0);
        p.adam_step(&grad(1.0), 0.001).unwrap();
        let first = p.get("w").unwrap().data()[0];
        p.adam_step(&grad(1.0), 0.001).unwrap();
        let second = p.get("w").unwrap().data()[0] - first;
        assert!((second / first - 1.0).abs() < 0.1);
    }

    #[test]
    fn unknown_gradient_is_rejected() {
        let mut p = scalar_set(0.0);
        let mut g = Gradients::new();
        g.insert("nope".into(), DenseArray::vector(vec![1.0]));
        assert!(matches!(p.adam_step(&g, 0.001), Err(NumericError::UnknownParameter(_))));
        assert_eq!(p.step(), 0);
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = grad(30.0);
        g.insert("b".into(), DenseArray::vector(vec![40.0]));
        let before = clip_global_norm(&mut g, 5.0);
        assert_eq!(before, 50.0);
        let after: f64 = g.values().map(DenseArray::sum_squares).sum::<f64>().sqrt();
        assert!((after - 5.0).abs() < 1e-12);
    }
}
