mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use riskseq::dataset::{
    compute_decay, downsample, final_quartile_start, generate_synthetic, pad_and_mask, Corpus, Post, SyntheticSpec,
    UserRecord, GAMBLING_LEXICON,
};
use riskseq::encoders::{tokenize, EmbeddingStore, EmotionLexicon, HashingEncoder, StoredPost};
use riskseq::evaluation::{auprc, auroc_pairwise, auroc_rank_sum, classification_metrics, wilcoxon_signed_rank};
use riskseq::model::{decode_checkpoint, encode_checkpoint, forward, init_params, Architecture, Mode, ModelConfig};
use riskseq::numeric::{bce_loss, softmax, DenseArray};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(1e-300),
        Just(f64::MAX),
        Just(-1.0 / 3.0),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn store_round_trips(
        width in 1usize..6,
        with_emotion in any::<bool>(),
        keys in prop::collection::btree_set(("[a-z0-9_]{1,8}", 0usize..6), 0..12),
        values in prop::collection::vec(finite(), 60),
        emotions in prop::collection::vec(0.0..1.0f64, 84),
    ) {
        let mut store = EmbeddingStore::new(width);
        for (i, (user, index)) in keys.into_iter().enumerate() {
            let text = values[i * width..(i + 1) * width].to_vec();
            let emotion = with_emotion.then(|| emotions[i * 7..(i + 1) * 7].to_vec());
            store.insert(user, index, StoredPost { text, emotion }).unwrap();
        }
        let mut bytes = Vec::new();
        store.write(&mut bytes).unwrap();
        let parsed = EmbeddingStore::parse(std::str::from_utf8(&bytes).unwrap()).unwrap();
        prop_assert_eq!(parsed, store);
    }

    #[test]
    fn hashing_norm_is_zero_or_one(text in "\\PC{0,80}", dim in 8usize..96, seed in any::<u64>()) {
        let v = HashingEncoder::new(dim, seed).unwrap().encode(&text);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
        prop_assert_eq!(norm == 0.0, tokenize(&text).next().is_none());
    }

    #[test]
    fn emotion_scores_are_strictly_positive_distributions(
        words in prop::collection::vec(prop_oneof!["[a-z]{1,6}", Just("sad".to_owned()), Just("angry".to_owned()), Just("happy".to_owned())], 0..20),
    ) {
        let p = EmotionLexicon::default().scores(&words.join(" "));
        prop_assert_eq!(p.len(), 7);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn softmax_rows_sum_to_one(logits in prop::collection::vec(-1e3..1e3f64, 2..40)) {
        let n = logits.len() / 2;
        let z = DenseArray::new(vec![n, 2], logits[..2 * n].to_vec()).unwrap();
        let p = softmax(&z);
        for i in 0..n {
            prop_assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bce_is_non_negative(rows in prop::collection::vec((0.0..=1.0f64, 0u8..2), 1..30)) {
        let data: Vec<f64> = rows.iter().flat_map(|(p, _)| [1.0 - p, *p]).collect();
        let y = DenseArray::new(vec![rows.len(), 2], data).unwrap();
        let labels: Vec<u8> = rows.iter().map(|r| r.1).collect();
        prop_assert!(bce_loss(&y, &labels).unwrap().value() >= 0.0);
    }

    #[test]
    fn auroc_paths_agree_and_ignore_monotone_maps(
        rows in prop::collection::vec((0.001..0.999f64, 0u8..2), 2..200),
        coarse in any::<bool>(),
    ) {
        let mut labels: Vec<u8> = rows.iter().map(|r| r.1).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = rows
            .iter()
            .map(|r| if coarse { (r.0 * 8.0).floor() / 8.0 + 0.01 } else { r.0 })
            .collect();
        let a = auroc_pairwise(&scores, &labels).unwrap();
        prop_assert!((a - auroc_rank_sum(&scores, &labels).unwrap()).abs() <= 1e-12);
        let cubed: Vec<f64> = scores.iter().map(|s| s.powi(3)).collect();
        prop_assert!((a - auroc_pairwise(&cubed, &labels).unwrap()).abs() <= 1e-12);
        prop_assert!((auprc(&scores, &labels).unwrap() - auprc(&cubed, &labels).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn metrics_ignore_example_order(
        pairs in prop::collection::vec((0u8..2, 0u8..2), 1..60),
        shuffle_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let (p, t): (Vec<u8>, Vec<u8>) = pairs.iter().cloned().unzip();
        let base = classification_metrics(&p, &t).unwrap();
        prop_assert_eq!(base.accuracy, (base.tp + base.tn) as f64 / pairs.len() as f64);
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let (p2, t2): (Vec<u8>, Vec<u8>) = shuffled.into_iter().unzip();
        prop_assert_eq!(classification_metrics(&p2, &t2).unwrap(), base);
    }

    #[test]
    fn decay_is_translation_invariant_and_bounded(
        gaps in prop::collection::vec(0i64..10_000_000, 0..40),
        start in 0i64..1_000_000_000,
        shift in 0i64..1_000_000_000,
    ) {
        let mut ts = vec![start];
        for g in gaps {
            ts.push(ts.last().unwrap() + g);
        }
        let d = compute_decay(&ts).unwrap();
        let shifted: Vec<i64> = ts.iter().map(|t| t + shift).collect();
        prop_assert_eq!(&compute_decay(&shifted).unwrap(), &d);
        prop_assert_eq!(d[0], 1.0);
        prop_assert!(d.iter().all(|&x| x > 0.0 && x <= 1.0));
    }

    #[test]
    fn padding_read_back_is_exact(lens in prop::collection::vec(1usize..9, 1..6), extra in 0usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users: Vec<_> = lens.iter().map(|&l| common::random_user(&mut rng, l, 4)).collect();
        let longest = *lens.iter().max().unwrap();
        let batch = pad_and_mask(&users, Some(longest + extra)).unwrap();
        for (row, u) in users.iter().enumerate() {
            prop_assert_eq!(&batch.unpad(row), u);
            let l = longest + extra;
            prop_assert!(batch.decay.data()[row * l + u.len()..(row + 1) * l].iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn batch_rows_do_not_interact(lens in prop::collection::vec(1usize..9, 2..6), arch_index in 1usize..8, seed in any::<u64>()) {
        let arch = Architecture::ALL[arch_index];
        let config = ModelConfig::new(arch, 4).with_hidden(3).with_seed(seed);
        let params = init_params(&config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users: Vec<_> = lens.iter().map(|&l| common::random_user(&mut rng, l, 4)).collect();
        let together = forward(&config, &params, &pad_and_mask(&users, None).unwrap(), Mode::Eval).unwrap();
        for (row, u) in users.iter().enumerate() {
            let alone = forward(&config, &params, &pad_and_mask(std::slice::from_ref(u), None).unwrap(), Mode::Eval).unwrap();
            prop_assert_eq!(together.y.row(row), alone.y.row(0));
        }
    }

    #[test]
    fn attention_weights_are_masked_distributions(lens in prop::collection::vec(1usize..10, 1..6), emotion in any::<bool>(), seed in any::<u64>()) {
        let arch = if emotion { Architecture::EmoLstmTdA } else { Architecture::LstmTdA };
        let config = ModelConfig::new(arch, 4).with_hidden(3).with_seed(seed);
        let params = init_params(&config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users: Vec<_> = lens.iter().map(|&l| common::random_user(&mut rng, l, 4)).collect();
        let batch = pad_and_mask(&users, None).unwrap();
        let t = forward(&config, &params, &batch, Mode::Eval).unwrap();
        for (row, &n) in lens.iter().enumerate() {
            let w = t.attention_weights.row(row);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            prop_assert!((w[..n].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w[n..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn downsampling_balances_and_keeps_the_minority(
        labels in prop::collection::vec(0u8..2, 2..60),
        seed in any::<u64>(),
    ) {
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let users: Vec<UserRecord> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| UserRecord::new(format!("u{i}"), vec![Post::new("x", 0)], l).unwrap())
            .collect();
        let corpus = Corpus::new(users).unwrap();
        let minority = if corpus.counts().positive <= corpus.counts().negative { 1 } else { 0 };
        let out = downsample(&corpus, seed).unwrap();
        prop_assert_eq!(out.counts().positive, out.counts().negative);
        prop_assert!(out.users().iter().all(|u| corpus.users().contains(u)));
        let kept = out.users().iter().filter(|u| u.label() == minority).count();
        let all = corpus.users().iter().filter(|u| u.label() == minority).count();
        prop_assert_eq!(kept, all);
    }

    #[test]
    fn wilcoxon_is_antisymmetric(pairs in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 5..25)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let (Ok(ab), Ok(ba)) = (wilcoxon_signed_rank(&a, &b), wilcoxon_signed_rank(&b, &a)) {
            prop_assert_eq!(ab.z_value, -ba.z_value);
            prop_assert_eq!(ab.p_value, ba.p_value);
            prop_assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
        }
    }

    #[test]
    fn checkpoints_round_trip_bit_exactly(arch_index in 0usize..8, hidden in 1usize..6, d in 1usize..9, seed in any::<u64>()) {
        let config = ModelConfig::new(Architecture::ALL[arch_index], d).with_hidden(hidden).with_seed(seed);
        let params = init_params(&config).unwrap();
        let (p, c) = decode_checkpoint(&encode_checkpoint(&params, &config)).unwrap();
        prop_assert_eq!(c, config);
        prop_assert!(p.same_values(&params));
    }
}

#[test]
fn planted_signal_concentrates_late() {
    let spec = SyntheticSpec {
        users: 60,
        positives: 30,
        max_posts: 40,
        mean_posts: 20.0,
        std_posts: 8.0,
        signal_strength: 1.0,
        recency: 1.0,
        background_rate: 0.05,
        ..SyntheticSpec::default()
    };
    let (mut late, mut total) = (0usize, 0usize);
    for seed in 0..10 {
        let corpus = generate_synthetic(&spec, seed).unwrap();
        for user in corpus.users().iter().filter(|u| u.label() == 1) {
            let q = final_quartile_start(user.len());
            for (i, post) in user.posts().iter().enumerate() {
                let hits = tokenize(&post.text)
                    .filter(|t| GAMBLING_LEXICON.contains(&t.as_str()))
                    .count();
                total += hits;
                if i >= q {
                    late += hits;
                }
            }
        }
    }
    let share = late as f64 / total as f64;
    assert!(share >= 0.7, "final-quartile share of lexicon hits {share:.3}");
}

#[test]
fn decay_scales_a_step_contribution_linearly() {
    let config = ModelConfig::new(Architecture::LstmTd, 4).with_hidden(3).with_seed(9);
    let params = init_params(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let user = common::random_user(&mut rng, 5, 4);
    let base = pad_and_mask(std::slice::from_ref(&user), None).unwrap();
    let reference = forward(&config, &params, &base, Mode::Eval).unwrap();
    let step = 3;
    let h = 3;
    let fused: Vec<f64> = reference.h_fused.data()[step * h..(step + 1) * h].to_vec();
    for scale in [1.0, 0.5, 0.25, 1e-3, 0.0] {
        let mut batch = base.clone();
        batch.decay.data_mut()[step] = scale;
        let t = forward(&config, &params, &batch, Mode::Eval).unwrap();
        let weight = t.attention_weights.row(0)[step];
        for k in 0..h {
            let contribution = weight * t.h_combined.data()[step * h + k];
            assert!((contribution - weight * scale * fused[k]).abs() <= 1e-15);
        }
    }
}
