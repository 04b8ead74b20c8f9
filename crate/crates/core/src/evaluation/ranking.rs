//! Threshold-free ranking metrics over positive-class scores.

use super::EvaluationError;

/// Inputs above this size use the rank-sum path.
pub const PAIRWISE_LIMIT: usize = 10_000;

fn class_counts(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), EvaluationError> {
    if scores.len() != labels.len() {
        return Err(EvaluationError::LengthMismatch(scores.len(), labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(EvaluationError::InvalidLabel(bad));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvaluationError::Undefined("scores contain NaN".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((pos, labels.len() - pos))
}

fn require_both(pos: usize, neg: usize) -> Result<(), EvaluationError> {
    if pos == 0 || neg == 0 {
        return Err(EvaluationError::Undefined("AUROC needs both classes".into()));
    }
    Ok(())
}

/// `P(s⁺ > s⁻) + ½ P(s⁺ = s⁻)` by enumerating every positive/negative pair.
pub fn auroc_pairwise(scores: &[f64], labels: &[u8]) -> Result<f64, EvaluationError> {
    let (pos, neg) = class_counts(scores, labels)?;
    require_both(pos, neg)?;
    let positives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(&s, _)| s)
        .collect();
    let negatives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 0)
        .map(|(&s, _)| s)
        .collect();
    // Twice the Mann-Whitney count, kept integral.
    let mut doubled: u64 = 0;
    for &p in &positives {
        for &n in &negatives {
            doubled += if p > n {
                2
            } else if p == n {
                1
            } else {
                0
            };
        }
    }
    Ok(doubled as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Mann-Whitney U from the positive rank sum, with average ranks for ties.
pub fn auroc_rank_sum(scores: &[f64], labels: &[u8]) -> Result<f64, EvaluationError> {
    let (pos, neg) = class_counts(scores, labels)?;
    require_both(pos, neg)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Rank sums are accumulated doubled so average ranks stay integral.
    let mut doubled_rank_sum: u64 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 averaged, doubled.
        let doubled_avg = (i + 1 + j + 1) as u64;
        let positives = idx[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        doubled_rank_sum += doubled_avg * positives;
        i = j + 1;
    }
    let doubled_u = doubled_rank_sum - (pos * (pos + 1)) as u64;
    Ok(doubled_u as f64 / (2.0 * pos as f64 * neg as f64))
}

pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64, EvaluationError> {
    if scores.len() <= PAIRWISE_LIMIT {
        auroc_pairwise(scores, labels)
    } else {
        auroc_rank_sum(scores, labels)
    }
}

/// Average precision: `Σ (R_k − R_{k−1}) · P_k` over distinct score
/// thresholds in descending order, tied scores entering together.
pub fn auprc(scores: &[f64], labels: &[u8]) -> Result<f64, EvaluationError> {
    let (pos, _) = class_counts(scores, labels)?;
    if pos == 0 {
        return Err(EvaluationError::Undefined("AUPRC needs at least one positive".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let new_tp = idx[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        tp += new_tp;
        fp += j + 1 - i - new_tp;
        if new_tp > 0 {
            area += (new_tp as f64 / pos as f64) * (tp as f64 / (tp + fp) as f64);
        }
        i = j + 1;
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.9, 0.8, 0.1, 0.2], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5; 4], &[1, 0, 1, 0]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.9, 0.4, 0.5], &[1, 1, 0]).unwrap(), 0.5);
        assert_eq!(auroc_rank_sum(&[0.9, 0.4, 0.5], &[1, 1, 0]).unwrap(), 0.5);
        assert!(matches!(
            auroc(&[0.1, 0.2], &[1, 1]),
            Err(EvaluationError::Undefined(_))
        ));
    }

    #[test]
    fn auprc_examples() {
        assert_eq!(auprc(&[0.9, 0.8, 0.1, 0.2], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auprc(&[0.9, 0.5, 0.1], &[1, 0, 0]).unwrap(), 1.0);
        // Positive ranked last of 3: precision 1/3 at recall 1.
        assert!((auprc(&[0.9, 0.5, 0.1], &[0, 0, 1]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        // One tie group holding everything: precision = prevalence.
        assert_eq!(auprc(&[0.5; 4], &[1, 0, 0, 0]).unwrap(), 0.25);
        assert!(matches!(
            auprc(&[0.1, 0.2], &[0, 0]),
            Err(EvaluationError::Undefined(_))
        ));
    }

    #[test]
    fn random_scores_give_prevalence() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 10_000;
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<f64>() < 0.3)).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let prevalence = labels.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
        assert!((auprc(&scores, &labels).unwrap() - prevalence).abs() < 0.05);
    }
}
