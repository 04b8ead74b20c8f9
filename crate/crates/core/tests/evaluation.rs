use riskseq::dataset::{generate_synthetic, Corpus, SplitFractions, SyntheticSpec};
use riskseq::encoders::{EmotionLexicon, HashingEncoder};
use riskseq::evaluation::{evaluate_users, multi_seed_run, run_seed, ExperimentSetup};
use riskseq::model::{Architecture, ModelConfig};
use riskseq::pipeline::encode_users;
use riskseq::training::TrainConfig;

const D_TEXT: usize = 32;

fn corpus(seed: u64) -> Corpus {
    let spec = SyntheticSpec {
        users: 100,
        positives: 50,
        max_posts: 20,
        mean_posts: 10.0,
        std_posts: 4.0,
        signal_strength: 1.0,
        ..SyntheticSpec::default()
    };
    generate_synthetic(&spec, seed).unwrap()
}

fn model(arch: Architecture) -> ModelConfig {
    ModelConfig::new(arch, D_TEXT).with_hidden(6)
}

fn training() -> TrainConfig {
    TrainConfig {
        epochs: 5,
        initial_lr: 0.01,
        ..TrainConfig::default()
    }
}

#[test]
fn fitted_split_scores_at_least_as_well_as_held_out() {
    let text = HashingEncoder::new(D_TEXT, 0).unwrap();
    let emotion = EmotionLexicon::default();
    let setup = ExperimentSetup {
        text: &text,
        emotion: &emotion,
        fractions: SplitFractions::default(),
        downsample: false,
    };
    let m = model(Architecture::LstmTd);
    let mut holds = 0;
    for seed in 0..10 {
        let run = run_seed(&m, &training(), &corpus(seed), &setup, seed).unwrap();
        let train_users = encode_users(&run.config, run.split.train.users(), &text, &emotion).unwrap();
        let fitted = evaluate_users(&run.config, &run.params, &train_users, 32).unwrap();
        holds += usize::from(fitted.f1 >= run.report.f1);
    }
    assert!(holds >= 9, "train f1 >= test f1 in {holds}/10 seeds");
}

#[test]
fn multi_seed_runs_repeat_exactly() {
    let text = HashingEncoder::new(D_TEXT, 0).unwrap();
    let emotion = EmotionLexicon::default();
    let setup = ExperimentSetup {
        text: &text,
        emotion: &emotion,
        fractions: SplitFractions::default(),
        downsample: true,
    };
    let c = corpus(3);
    let m = model(Architecture::EmoLstmTdA);
    let a = multi_seed_run(&m, &training(), &c, &setup, &[0, 1, 2]).unwrap();
    let b = multi_seed_run(&m, &training(), &c, &setup, &[0, 1, 2]).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        a.runs.iter().map(|r| r.seed).collect::<Vec<_>>(),
        vec![Some(0), Some(1), Some(2)]
    );
}

#[test]
fn repeated_seed_has_zero_spread() {
    let text = HashingEncoder::new(D_TEXT, 0).unwrap();
    let emotion = EmotionLexicon::default();
    let setup = ExperimentSetup {
        text: &text,
        emotion: &emotion,
        fractions: SplitFractions::default(),
        downsample: false,
    };
    let agg = multi_seed_run(&model(Architecture::GruD), &training(), &corpus(4), &setup, &[1, 1]).unwrap();
    assert_eq!(agg.std.f1, 0.0);
    assert_eq!(agg.std.accuracy, 0.0);
    assert_eq!(agg.runs[0], agg.runs[1]);
}

#[test]
fn one_seed_is_rejected() {
    let text = HashingEncoder::new(D_TEXT, 0).unwrap();
    let emotion = EmotionLexicon::default();
    let setup = ExperimentSetup {
        text: &text,
        emotion: &emotion,
        fractions: SplitFractions::default(),
        downsample: false,
    };
    assert!(multi_seed_run(&model(Architecture::GruD), &training(), &corpus(5), &setup, &[1]).is_err());
}
