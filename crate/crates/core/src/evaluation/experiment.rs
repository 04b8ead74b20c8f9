//! Seeded end-to-end runs and their aggregation across seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{downsample, split, Corpus, DatasetError, EncodedUser, Split, SplitFractions};
use crate::encoders::{EmotionEncoder, TextEncoder};
use crate::model::{Architecture, ModelConfig};
use crate::numeric::ParameterSet;
use crate::pipeline::{encode_users, PipelineError};
use crate::training::{predict, train, TrainConfig, TrainError, TrainHistory};

use super::{auprc, auroc, classification_metrics, EvaluationError, MetricsReport};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metrics(#[from] EvaluationError),
}

/// Everything a seeded run needs besides the model and training configs.
#[derive(Clone, Copy)]
pub struct ExperimentSetup<'a> {
    pub text: &'a dyn TextEncoder,
    pub emotion: &'a dyn EmotionEncoder,
    pub fractions: SplitFractions,
    pub downsample: bool,
}

pub struct SeedRun {
    pub seed: u64,
    pub config: ModelConfig,
    pub params: ParameterSet,
    pub history: TrainHistory,
    pub split: Split,
    pub report: MetricsReport,
}

/// Metrics of `params` on `users`, thresholding at the larger class probability.
pub fn evaluate_users(
    config: &ModelConfig,
    params: &ParameterSet,
    users: &[EncodedUser],
    batch_size: usize,
) -> Result<MetricsReport, RunError> {
    let y = predict(config, params, users, batch_size)?;
    let labels: Vec<u8> = users.iter().map(|u| u.label).collect();
    let scores: Vec<f64> = (0..users.len()).map(|i| y.row(i)[1]).collect();
    let preds: Vec<u8> = (0..users.len()).map(|i| u8::from(y.row(i)[1] > y.row(i)[0])).collect();
    let mut report = classification_metrics(&preds, &labels)?;
    report.auroc = auroc(&scores, &labels).ok();
    report.auprc = auprc(&scores, &labels).ok();
    Ok(report)
}

/// One seed controls downsampling, the split, initialization and shuffling.
pub fn run_seed(
    model: &ModelConfig,
    tc: &TrainConfig,
    corpus: &Corpus,
    setup: &ExperimentSetup<'_>,
    seed: u64,
) -> Result<SeedRun, RunError> {
    let balanced;
    let source = if setup.downsample {
        balanced = downsample(corpus, seed)?;
        &balanced
    } else {
        corpus
    };
    let parts = split(source, setup.fractions, seed)?;
    let config = model.clone().with_seed(seed);
    let tc = TrainConfig { seed, ..tc.clone() };
    let encode = |c: &Corpus| encode_users(&config, c.users(), setup.text, setup.emotion);
    let (train_users, val_users, test_users) =
        (encode(&parts.train)?, encode(&parts.validation)?, encode(&parts.test)?);
    let (params, history) = train(&config, &tc, &train_users, &val_users)?;
    let mut report = evaluate_users(&config, &params, &test_users, tc.batch_size)?;
    report.seed = Some(seed);
    Ok(SeedRun {
        seed,
        config,
        params,
        history,
        split: parts,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub architecture: Architecture,
    pub runs: Vec<MetricsReport>,
    pub mean: MetricSummary,
    /// Sample standard deviation (n − 1 denominator).
    pub std: MetricSummary,
}

impl SeedAggregate {
    pub fn from_reports(architecture: Architecture, runs: Vec<MetricsReport>) -> Result<Self, EvaluationError> {
        if runs.is_empty() {
            return Err(EvaluationError::Empty);
        }
        let stats = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> (Option<f64>, Option<f64>) {
            let values: Option<Vec<f64>> = runs.iter().map(f).collect();
            let Some(v) = values else { return (None, None) };
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = if v.len() > 1 {
                v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            (Some(mean), Some(var.sqrt()))
        };
        let acc = stats(&|r| Some(r.accuracy));
        let pre = stats(&|r| Some(r.precision));
        let rec = stats(&|r| Some(r.recall));
        let f1 = stats(&|r| Some(r.f1));
        let roc = stats(&|r| r.auroc);
        let prc = stats(&|r| r.auprc);
        let pick = |i: usize| {
            let get = |p: (Option<f64>, Option<f64>)| if i == 0 { p.0 } else { p.1 };
            MetricSummary {
                accuracy: get(acc).expect("always defined"),
                precision: get(pre).expect("always defined"),
                recall: get(rec).expect("always defined"),
                f1: get(f1).expect("always defined"),
                auroc: get(roc),
                auprc: get(prc),
            }
        };
        Ok(Self {
            architecture,
            mean: pick(0),
            std: pick(1),
            runs,
        })
    }

    pub fn f1_scores(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.f1).collect()
    }
}

/// Runs every seed (in parallel on the current rayon pool) and aggregates.
pub fn multi_seed_run(
    model: &ModelConfig,
    tc: &TrainConfig,
    corpus: &Corpus,
    setup: &ExperimentSetup<'_>,
    seeds: &[u64],
) -> Result<SeedAggregate, EvaluationError> {
    if seeds.len() < 2 {
        return Err(EvaluationError::Config(format!(
            "need at least 2 seeds, got {}",
            seeds.len()
        )));
    }
    let tc = TrainConfig {
        checkpoint_path: None,
        ..tc.clone()
    };
    let reports = seeds
        .par_iter()
        .map(|&seed| {
            run_seed(model, &tc, corpus, setup, seed)
                .map(|r| r.report)
                .map_err(|e| EvaluationError::Run {
                    architecture: model.architecture.to_string(),
                    seed,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    SeedAggregate::from_reports(model.architecture, reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(f1: f64) -> MetricsReport {
        let mut r = classification_metrics(&[1, 0], &[1, 0]).unwrap();
        r.f1 = f1;
        r
    }

    #[test]
    fn duplicate_runs_have_zero_std() {
        let agg = SeedAggregate::from_reports(Architecture::LstmTd, vec![report(0.7), report(0.7)]).unwrap();
        assert_eq!(agg.std.f1, 0.0);
        assert_eq!(agg.mean.f1, 0.7);
        assert_eq!(agg.mean.auroc, None);
    }

    #[test]
    fn sample_standard_deviation() {
        let agg = SeedAggregate::from_reports(Architecture::LstmTd, vec![report(0.5), report(1.0)]).unwrap();
        assert!((agg.std.f1 - 0.125f64.sqrt()).abs() < 1e-15);
    }
}
