//! Rank-sum test, Cohen's d, and effect-size labels.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::StudyError;

/// Largest combined sample size for which the exact null distribution is
/// enumerated.
pub const EXACT_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    pub u_a: f64,
    pub u_b: f64,
    /// Two-sided.
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample, and the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Number of `k`-subsets of {1..n} for each rank sum, indexed by sum.
fn rank_sum_counts(n: usize, k: usize) -> Vec<u64> {
    let max_sum = n * (n + 1) / 2;
    // counts[j][s]: subsets of size j with sum s.
    let mut counts = vec![vec![0u64; max_sum + 1]; k + 1];
    counts[0][0] = 1;
    for r in 1..=n {
        for j in (1..=k.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                counts[j][s] += counts[j - 1][s - r];
            }
        }
    }
    counts.swap_remove(k)
}

fn exact_p(u_min: f64, n_a: usize, n_b: usize) -> f64 {
    let counts = rank_sum_counts(n_a + n_b, n_a);
    let offset = n_a * (n_a + 1) / 2;
    let total: u64 = counts.iter().sum();
    // U = rank sum - offset; count outcomes with U <= u_min.
    let tail: u64 = counts
        .iter()
        .enumerate()
        .skip(offset)
        .filter(|(s, _)| (*s - offset) as f64 <= u_min)
        .map(|(_, c)| *c)
        .sum();
    ((2 * tail) as f64 / total as f64).min(1.0)
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> MannWhitney {
    assert!(!a.is_empty() && !b.is_empty(), "both samples must be non-empty");
    let (n_a, n_b) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let r_a: f64 = ranks[..n_a].iter().sum();
    let u_a = r_a - (n_a * (n_a + 1)) as f64 / 2.0;
    let u_b = (n_a * n_b) as f64 - u_a;

    if ties.is_empty() && n_a + n_b <= EXACT_LIMIT {
        return MannWhitney { u_a, u_b, p: exact_p(u_a.min(u_b), n_a, n_b), exact: true };
    }

    let n = (n_a + n_b) as f64;
    let mean = (n_a * n_b) as f64 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let variance = (n_a * n_b) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let p = if variance <= 0.0 {
        1.0
    } else {
        let z = ((u_a - mean).abs() - 0.5).max(0.0) / variance.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.cdf(-z)).min(1.0)
    };
    MannWhitney { u_a, u_b, p, exact: false }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum()
}

/// `(mean(a) - mean(b)) / pooled sd`, with (n-1) sample variances.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StudyError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StudyError::SampleTooSmall { a: a.len(), b: b.len() });
    }
    let pooled_var = (sum_sq_dev(a) + sum_sq_dev(b)) / (a.len() + b.len() - 2) as f64;
    if pooled_var == 0.0 {
        return Err(StudyError::ZeroVariance);
    }
    Ok((mean(a) - mean(b)) / pooled_var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EffectLabel {
    Negligible,
    #[serde(rename = "Very Small")]
    VerySmall,
    Small,
    Medium,
    Large,
    #[serde(rename = "Very Large")]
    VeryLarge,
    Huge,
}

impl EffectLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EffectLabel::Negligible => "Negligible",
            EffectLabel::VerySmall => "Very Small",
            EffectLabel::Small => "Small",
            EffectLabel::Medium => "Medium",
            EffectLabel::Large => "Large",
            EffectLabel::VeryLarge => "Very Large",
            EffectLabel::Huge => "Huge",
        }
    }
}

impl fmt::Display for EffectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn effect_label(d: f64) -> EffectLabel {
    let d = d.abs();
    match d {
        d if d < 0.01 => EffectLabel::Negligible,
        d if d < 0.2 => EffectLabel::VerySmall,
        d if d < 0.5 => EffectLabel::Small,
        d if d < 0.8 => EffectLabel::Medium,
        d if d < 1.2 => EffectLabel::Large,
        d if d < 2.0 => EffectLabel::VeryLarge,
        _ => EffectLabel::Huge,
    }
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}
