use serde::{Deserialize, Serialize};

use super::EvaluationError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when the evaluated set holds a single class.
    pub auroc: Option<f64>,
    /// `None` when the evaluated set has no positives.
    pub auprc: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Set when `tp + fp = 0` and precision was defined as 0.
    pub precision_undefined: bool,
    /// Set when `tp + fn = 0` and recall was defined as 0.
    pub recall_undefined: bool,
    pub seed: Option<u64>,
}

impl MetricsReport {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Confusion-matrix metrics with label 1 as the positive class.
pub fn classification_metrics(predicted: &[u8], truth: &[u8]) -> Result<MetricsReport, EvaluationError> {
    if predicted.len() != truth.len() {
        return Err(EvaluationError::LengthMismatch(predicted.len(), truth.len()));
    }
    if predicted.is_empty() {
        return Err(EvaluationError::Empty);
    }
    if let Some(&bad) = predicted.iter().chain(truth).find(|&&v| v > 1) {
        return Err(EvaluationError::InvalidLabel(bad));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            _ => fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MetricsReport {
        accuracy: (tp + tn) as f64 / predicted.len() as f64,
        precision,
        recall,
        f1,
        auroc: None,
        auprc: None,
        tp,
        fp,
        tn,
        fn_,
        precision_undefined: tp + fp == 0,
        recall_undefined: tp + fn_ == 0,
        seed: None,
    })
}
