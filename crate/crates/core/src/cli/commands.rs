use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use statrs::statistics::{Data, OrderStatistics};

use crate::dataset::{generate_synthetic, Corpus};
use crate::evaluation::{
    attention_report, evaluate_users, multi_seed_run, run_seed, wilcoxon_signed_rank, write_attention_jsonl,
    ComparisonResult, ExperimentSetup, MetricsReport, SeedAggregate,
};
use crate::model::{load_checkpoint_for, ModelConfig};
use crate::numeric::ParameterSet;
use crate::pipeline::encode_users;
use crate::training::{TrainConfig, TrainHistory};

use super::config::{EngineConfig, Requirement};
use super::CliError;

/// Writes through a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let io = |e| CliError::io(path, e);
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    write(&mut tmp).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn output_path(config: &EngineConfig, flag: Option<&Path>, default_name: &str) -> PathBuf {
    flag.map(Path::to_owned)
        .unwrap_or_else(|| config.evaluation.out_dir.join(default_name))
}

fn checkpoint_path(config: &EngineConfig) -> PathBuf {
    config
        .training
        .checkpoint_path
        .clone()
        .unwrap_or_else(|| config.evaluation.out_dir.join("checkpoint.bin"))
}

fn load_existing_checkpoint(config: &EngineConfig) -> Result<(ParameterSet, ModelConfig), CliError> {
    let path = checkpoint_path(config);
    std::fs::metadata(&path).map_err(|e| CliError::io(&path, e))?;
    Ok(load_checkpoint_for(&path, &config.model_config())?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub users: usize,
    pub negative: usize,
    pub positive: usize,
    pub min_posts: usize,
    pub q25_posts: f64,
    pub median_posts: f64,
    pub q75_posts: f64,
    pub max_posts: usize,
    pub mean_posts: f64,
}

impl CorpusSummary {
    pub fn line(&self) -> String {
        format!(
            "users {}  negative {}  positive {}  posts min {}  q25 {:.1}  median {:.1}  q75 {:.1}  max {}  mean {:.1}",
            self.users,
            self.negative,
            self.positive,
            self.min_posts,
            self.q25_posts,
            self.median_posts,
            self.q75_posts,
            self.max_posts,
            self.mean_posts
        )
    }
}

pub fn corpus_summary(corpus: &Corpus) -> CorpusSummary {
    let counts = corpus.counts();
    let lengths: Vec<f64> = corpus.users().iter().map(|u| u.len() as f64).collect();
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let mut data = Data::new(lengths);
    CorpusSummary {
        users: corpus.len(),
        negative: counts.negative,
        positive: counts.positive,
        min_posts: corpus.users().iter().map(|u| u.len()).min().unwrap_or(0),
        q25_posts: data.lower_quartile(),
        median_posts: data.median(),
        q75_posts: data.upper_quartile(),
        max_posts: corpus.max_posts(),
        mean_posts: mean,
    }
}

/// Generates the configured corpus and writes it as JSONL.
pub fn cmd_generate(config: &EngineConfig, out: Option<&Path>) -> Result<CorpusSummary, CliError> {
    config.validate(Requirement::Generate)?;
    let path = out
        .map(Path::to_owned)
        .or_else(|| config.dataset.path.clone())
        .unwrap_or_else(|| config.evaluation.out_dir.join("corpus.jsonl"));
    let corpus = generate_synthetic(&config.dataset.generator, config.dataset.generator_seed)?;
    let mut bytes = Vec::new();
    corpus.write_jsonl(&mut bytes)?;
    write_atomic(&path, |w| w.write_all(&bytes))?;
    Ok(corpus_summary(&corpus))
}

pub struct TrainOutcome {
    pub history: TrainHistory,
    pub history_path: PathBuf,
    pub checkpoint: PathBuf,
    /// Held-out test metrics of the best checkpoint.
    pub report: MetricsReport,
}

/// One seeded run; `training.seed` drives downsampling, the split, initialization and shuffling.
pub fn cmd_train(config: &EngineConfig, out: Option<&Path>) -> Result<TrainOutcome, CliError> {
    config.validate(Requirement::Train)?;
    let history_path = output_path(config, out, "history.json");
    let checkpoint = checkpoint_path(config);
    let corpus = config.load_corpus()?;
    if let Some(dir) = checkpoint.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let encoders = config.encoders()?;
    let setup = ExperimentSetup {
        text: encoders.text.as_ref(),
        emotion: encoders.emotion.as_ref(),
        fractions: config.dataset.fractions,
        downsample: config.dataset.downsample,
    };
    let tc = TrainConfig {
        checkpoint_path: Some(checkpoint.clone()),
        ..config.training.clone()
    };
    let run = run_seed(&config.model_config(), &tc, &corpus, &setup, config.training.seed)?;
    let json = run.history.to_json();
    write_atomic(&history_path, |w| w.write_all(json.as_bytes()))?;
    Ok(TrainOutcome {
        history: run.history,
        history_path,
        checkpoint,
        report: run.report,
    })
}

const CSV_HEADER: [&str; 8] = [
    "model",
    "seed",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "auroc",
    "auprc",
];

fn csv_row(model: &str, report: &MetricsReport) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        model.to_owned(),
        report.seed.map(|s| s.to_string()).unwrap_or_default(),
        report.accuracy.to_string(),
        report.precision.to_string(),
        report.recall.to_string(),
        report.f1.to_string(),
        opt(report.auroc),
        opt(report.auprc),
    ]
}

fn metrics_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a MetricsReport)>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(fail)?;
    for (model, report) in rows {
        w.write_record(csv_row(model, report)).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))
}

/// Scores the checkpoint on every user of the configured corpus.
pub fn cmd_evaluate(config: &EngineConfig, out: Option<&Path>) -> Result<MetricsReport, CliError> {
    config.validate(Requirement::Evaluate)?;
    let json_path = output_path(config, out, "metrics.json");
    let csv_path = json_path.with_extension("csv");
    let (params, model) = load_existing_checkpoint(config)?;
    let corpus = config.load_corpus()?;
    let encoders = config.encoders()?;
    let users = encode_users(
        &model,
        corpus.users(),
        encoders.text.as_ref(),
        encoders.emotion.as_ref(),
    )?;
    let mut report = evaluate_users(&model, &params, &users, config.training.batch_size)?;
    report.seed = Some(model.init_seed);
    let json = serde_json::to_string_pretty(&report).expect("metrics serialize");
    let csv = metrics_csv([(model.architecture.name(), &report)])?;
    write_atomic(&json_path, |w| w.write_all(json.as_bytes()))?;
    write_atomic(&csv_path, |w| w.write_all(&csv))?;
    Ok(report)
}

pub struct CompareOutcome {
    pub aggregates: Vec<SeedAggregate>,
    /// `("A vs B", result)` for consecutive architectures, on per-seed F1.
    pub comparisons: Vec<(String, ComparisonResult)>,
    pub path: PathBuf,
    pub runs_path: PathBuf,
}

impl CompareOutcome {
    pub fn table(&self) -> String {
        let mut s = String::new();
        for agg in &self.aggregates {
            s.push_str(&format!(
                "{:<12} f1 {:.4} ± {:.4}\n",
                agg.architecture.name(),
                agg.mean.f1,
                agg.std.f1
            ));
        }
        s.push_str(&format!("{:<26} {:>9} {:>9}  {}\n", "comparison", "z", "p", "sig"));
        for (name, r) in &self.comparisons {
            s.push_str(&format!(
                "{:<26} {:>9.4} {:>9.5}  {}\n",
                name,
                r.z_value,
                r.p_value,
                r.significant_at.label()
            ));
        }
        s
    }
}

/// Multi-seed runs on identical seeds for every listed architecture, then
/// Wilcoxon tests on consecutive pairs.
pub fn cmd_compare(config: &EngineConfig, out: Option<&Path>) -> Result<CompareOutcome, CliError> {
    config.validate(Requirement::Compare)?;
    let path = output_path(config, out, "comparison.csv");
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let runs_path = path.with_file_name(format!("{stem}_runs.csv"));
    let corpus = config.load_corpus()?;
    let encoders = config.encoders()?;
    let setup = ExperimentSetup {
        text: encoders.text.as_ref(),
        emotion: encoders.emotion.as_ref(),
        fractions: config.dataset.fractions,
        downsample: config.dataset.downsample,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.evaluation.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let aggregates = pool.install(|| {
        config
            .evaluation
            .architectures
            .iter()
            .map(|&arch| {
                multi_seed_run(
                    &config.model_config_for(arch),
                    &config.training,
                    &corpus,
                    &setup,
                    &config.evaluation.seeds,
                )
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    // Per-seed rows are kept even when a comparison turns out degenerate.
    let runs = metrics_csv(
        aggregates
            .iter()
            .flat_map(|a| a.runs.iter().map(move |r| (a.architecture.name(), r))),
    )?;
    write_atomic(&runs_path, |w| w.write_all(&runs))?;
    let mut comparisons = Vec::new();
    for pair in aggregates.windows(2) {
        let result = wilcoxon_signed_rank(&pair[0].f1_scores(), &pair[1].f1_scores())?;
        comparisons.push((format!("{} vs {}", pair[0].architecture, pair[1].architecture), result));
    }

    let fail = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["comparison", "z", "p", "sig"]).map_err(fail)?;
    for (name, r) in &comparisons {
        w.write_record([
            name.clone(),
            r.z_value.to_string(),
            r.p_value.to_string(),
            r.significant_at.label().to_owned(),
        ])
        .map_err(fail)?;
    }
    let table = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    write_atomic(&path, |w| w.write_all(&table))?;
    Ok(CompareOutcome {
        aggregates,
        comparisons,
        path,
        runs_path,
    })
}

/// Writes the ranked attention report for every user of the configured corpus.
pub fn cmd_attention(config: &EngineConfig, out: Option<&Path>) -> Result<PathBuf, CliError> {
    config.validate(Requirement::Attention)?;
    let path = output_path(config, out, "attention.jsonl");
    let (params, model) = load_existing_checkpoint(config)?;
    let corpus = config.load_corpus()?;
    let encoders = config.encoders()?;
    let report = attention_report(
        &model,
        &params,
        corpus.users(),
        encoders.text.as_ref(),
        encoders.emotion.as_ref(),
        config.evaluation.top_k,
    )?;
    let mut bytes = Vec::new();
    write_attention_jsonl(&report, &mut bytes).map_err(|e| CliError::io(&path, e))?;
    write_atomic(&path, |w| w.write_all(&bytes))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Post, UserRecord};

    #[test]
    fn summary_of_known_corpus() {
        let users = (1..=4)
            .map(|n| {
                let posts = (0..n).map(|i| Post::new("x", i as i64)).collect();
                UserRecord::new(format!("u{n}"), posts, u8::from(n == 4)).unwrap()
            })
            .collect();
        let s = corpus_summary(&Corpus::new(users).unwrap());
        assert_eq!((s.users, s.negative, s.positive), (4, 3, 1));
        assert_eq!((s.min_posts, s.max_posts), (1, 4));
        assert_eq!(s.mean_posts, 2.5);
        assert_eq!(s.median_posts, 2.5);
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, |w| w.write_all(b"first version")).unwrap();
        write_atomic(&p, |w| w.write_all(b"second")).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn metrics_csv_columns() {
        let mut r = crate::evaluation::classification_metrics(&[1, 0], &[1, 0]).unwrap();
        r.seed = Some(3);
        let text = String::from_utf8(metrics_csv([("LSTMTd", &r)]).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "model,seed,accuracy,precision,recall,f1,auroc,auprc"
        );
        assert_eq!(lines.next().unwrap(), "LSTMTd,3,1,1,1,1,,");
    }
}
