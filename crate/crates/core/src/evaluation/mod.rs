//! Metrics, significance testing, multi-seed experiments and attention audits.

mod attention;
mod experiment;
mod metrics;
mod ranking;
mod wilcoxon;

pub use attention::{attention_report, excerpt, write_attention_jsonl, AttentionEntry, UserAttention, EXCERPT_CHARS};
pub use experiment::{
    evaluate_users, multi_seed_run, run_seed, ExperimentSetup, MetricSummary, RunError, SeedAggregate, SeedRun,
};
pub use metrics::{classification_metrics, MetricsReport};
pub use ranking::{auprc, auroc, auroc_pairwise, auroc_rank_sum, PAIRWISE_LIMIT};
pub use wilcoxon::{
    exact_p_value, normal_p_value, normal_z, signed_ranks, wilcoxon_signed_rank, ComparisonResult, Significance,
    TestMethod, EXACT_LIMIT, MIN_PAIRS,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("no examples to evaluate")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label {0} is not in {{0, 1}}")]
    InvalidLabel(u8),
    #[error("undefined metric: {0}")]
    Undefined(String),
    #[error("degenerate comparison: every paired difference is zero")]
    Degenerate,
    #[error("{0} non-zero differences, at least {MIN_PAIRS} required")]
    TooFewPairs(usize),
    #[error("evaluation config: {0}")]
    Config(String),
    #[error("{architecture} seed {seed}: {source}")]
    Run {
        architecture: String,
        seed: u64,
        #[source]
        source: Box<RunError>,
    },
}
