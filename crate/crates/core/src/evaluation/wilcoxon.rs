//! Two-sided Wilcoxon signed-rank test on paired per-seed scores.
//!
//! Zero differences are dropped, tied magnitudes share their average rank,
//! and `W = min(W⁺, W⁻)`. The reported z is signed by `W⁺ − n(n+1)/4`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::EvaluationError;

/// Largest `n` for which the p-value comes from full enumeration.
pub const EXACT_LIMIT: usize = 12;
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "none")]
    NotSignificant,
    #[serde(rename = "0.005")]
    At005,
    #[serde(rename = "0.001")]
    At001,
}

impl Significance {
    pub fn from_p(p: f64) -> Self {
        if p < 0.001 {
            Significance::At001
        } else if p < 0.005 {
            Significance::At005
        } else {
            Significance::NotSignificant
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Significance::NotSignificant => "No",
            Significance::At005 => "Yes (p<0.005)",
            Significance::At001 => "Yes (p<0.001)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub z_value: f64,
    pub p_value: f64,
    pub significant_at: Significance,
    pub n_pairs: usize,
    pub method: TestMethod,
    pub w_plus: f64,
    pub w_minus: f64,
}

/// Signed non-zero differences `a − b` and their average ranks by magnitude.
pub fn signed_ranks(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>), EvaluationError> {
    if a.len() != b.len() {
        return Err(EvaluationError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(EvaluationError::Undefined("non-finite score difference".into()));
    }
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0.0; diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    Ok((diffs, ranks))
}

/// `P(min(W⁺, W⁻) ≤ w)` under the null, by enumerating all `2ⁿ` sign patterns.
pub fn exact_p_value(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len();
    // Average ranks are multiples of ½; doubling keeps the comparison exact.
    let doubled: Vec<u64> = ranks.iter().map(|r| (r * 2.0).round() as u64).collect();
    let total: u64 = doubled.iter().sum();
    let target = (w * 2.0).round() as u64;
    let mut hits: u64 = 0;
    for mask in 0u64..(1 << n) {
        let plus: u64 = (0..n).filter(|&k| mask >> k & 1 == 1).map(|k| doubled[k]).sum();
        if plus.min(total - plus) <= target {
            hits += 1;
        }
    }
    (hits as f64 / (1u64 << n) as f64).min(1.0)
}

/// Signed z for `W⁺` with the tie-corrected null variance.
pub fn normal_z(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    (w_plus - mean) / var.sqrt()
}

pub fn normal_p_value(z: f64) -> f64 {
    let normal = Normal::standard();
    (2.0 * normal.cdf(-z.abs())).min(1.0)
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<ComparisonResult, EvaluationError> {
    let (diffs, ranks) = signed_ranks(a, b)?;
    let n = diffs.len();
    if n == 0 {
        return Err(EvaluationError::Degenerate);
    }
    if n < MIN_PAIRS {
        return Err(EvaluationError::TooFewPairs(n));
    }
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_minus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d < 0.0)
        .map(|(_, r)| r)
        .sum();
    let z_value = normal_z(&ranks, w_plus);
    let (p_value, method) = if n <= EXACT_LIMIT {
        (exact_p_value(&ranks, w_plus.min(w_minus)), TestMethod::Exact)
    } else {
        (normal_p_value(z_value), TestMethod::NormalApproximation)
    };
    Ok(ComparisonResult {
        z_value,
        p_value,
        significant_at: Significance::from_p(p_value),
        n_pairs: n,
        method,
        w_plus,
        w_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_positive_ten() {
        let a: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let b = vec![0.0; 10];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, TestMethod::Exact);
        assert!((r.p_value - 2.0 / 1024.0).abs() < 1e-15);
        assert!((r.z_value - 27.5 / 96.25f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.significant_at, Significance::At005);
    }

    #[test]
    fn identical_inputs_are_degenerate() {
        let a = [0.1, 0.2, 0.3, 0.4, 0.5];
        assert!(matches!(wilcoxon_signed_rank(&a, &a), Err(EvaluationError::Degenerate)));
    }

    #[test]
    fn swap_flips_z_sign() {
        let a = [0.9, 0.7, 0.8, 0.95, 0.6, 0.75];
        let b = [0.85, 0.72, 0.7, 0.9, 0.65, 0.7];
        let ab = wilcoxon_signed_rank(&a, &b).unwrap();
        let ba = wilcoxon_signed_rank(&b, &a).unwrap();
        assert_eq!(ab.z_value, -ba.z_value);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn ties_share_average_ranks() {
        let (_, ranks) = signed_ranks(&[1.0, -1.0, 3.0, 2.0], &[0.0; 4]).unwrap();
        assert_eq!(ranks, vec![1.5, 1.5, 4.0, 3.0]);
    }

    #[test]
    fn large_samples_use_normal_path() {
        let a: Vec<f64> = (0..20).map(|i| (i as f64 * 0.77).sin()).collect();
        let b: Vec<f64> = (0..20).map(|i| (i as f64 * 0.31).cos()).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, TestMethod::NormalApproximation);
        assert_eq!(r.p_value, normal_p_value(r.z_value));
    }

    #[test]
    fn too_few_pairs() {
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]),
            Err(EvaluationError::TooFewPairs(4))
        ));
    }
}
