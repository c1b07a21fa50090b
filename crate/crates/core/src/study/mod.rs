//! Best/random/worst groups, metric comparisons, and smell prevalence.

mod report;
pub mod stats;

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{emit_reports, StudyJson};
pub use stats::{cohens_d, effect_label, mann_whitney_u, median, EffectLabel, MannWhitney};

use crate::history::EvolutionMetrics;
use crate::inspect::{select_test_methods, Exclusion, Smell, SmellReport, StaticMetrics, TestMethodInfo};
use crate::matrix::OutcomeMatrix;
use crate::scoring::{score_matrix, MatrixScores, MethodScore};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("need at least 3 selected test methods, found {0}")]
    InsufficientPopulation(usize),
    #[error("pooled standard deviation is zero")]
    ZeroVariance,
    #[error("samples of sizes {a} and {b} are too small (need at least 2 each)")]
    SampleTooSmall { a: usize, b: usize },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

/// Whether the random group may share members with the best and worst groups.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomPolicy {
    #[default]
    Disjoint,
    Overlapping,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyGroups {
    pub requested_k: usize,
    pub k: usize,
    pub seed: u64,
    pub random_policy: RandomPolicy,
    /// Highest score first.
    pub best: Vec<String>,
    /// Lowest score first.
    pub worst: Vec<String>,
    /// Sorted by id.
    pub random: Vec<String>,
}

/// Ranks by (score desc, covered desc, id asc); `best` is the head of that
/// order and `worst` its tail, read backwards. Scores must be defined.
pub fn select_groups(scores: &[&MethodScore], k: usize, seed: u64, policy: RandomPolicy) -> Result<StudyGroups, StudyError> {
    let n = scores.len();
    if n < 3 {
        return Err(StudyError::InsufficientPopulation(n));
    }
    let mut ranked: Vec<&MethodScore> = scores.to_vec();
    ranked.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then(b.covered.cmp(&a.covered))
            .then_with(|| a.test_id.cmp(&b.test_id))
    });
    let effective = k.min(n / 3);
    if effective < k {
        log::warn!("group size reduced from {k} to {effective} ({n} selected test methods)");
    }
    let ids: Vec<String> = ranked.iter().map(|s| s.test_id.clone()).collect();
    let best = ids[..effective].to_vec();
    let worst: Vec<String> = ids[n - effective..].iter().rev().cloned().collect();
    let pool: Vec<&String> = match policy {
        RandomPolicy::Disjoint => ids[effective..n - effective].iter().collect(),
        RandomPolicy::Overlapping => ids.iter().collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random: Vec<String> = rand::seq::index::sample(&mut rng, pool.len(), effective)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect();
    random.sort();
    Ok(StudyGroups { requested_k: k, k: effective, seed, random_policy: policy, best, worst, random })
}

/// Static, evolutionary, and smell facts of one discovered method; this is
/// what a persisted run keeps about source code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InspectedMethod {
    pub id: String,
    pub file: String,
    pub line: u32,
    pub is_test: bool,
    pub is_skipped: bool,
    /// Defined inside another function.
    pub nested: bool,
    pub metrics: StaticMetrics,
    pub smells: SmellReport,
    pub evolution: Option<EvolutionMetrics>,
}

impl TestMethodInfo for InspectedMethod {
    fn method_id(&self) -> &str {
        &self.id
    }
    fn is_test(&self) -> bool {
        self.is_test
    }
    fn is_skipped(&self) -> bool {
        self.is_skipped
    }
}

/// Metrics compared across groups, in report order.
pub const METRICS: [&str; 8] = [
    "sloc",
    "bad_asserts",
    "exceptions",
    "magic_numbers",
    "contributors",
    "modifications",
    "expertise",
    "mutation_score",
];

fn metric_value(name: &str, m: &InspectedMethod, s: &MethodScore) -> Option<f64> {
    let evo = m.evolution.as_ref();
    match name {
        "sloc" => Some(m.metrics.sloc as f64),
        "bad_asserts" => Some(m.metrics.bad_asserts as f64),
        "exceptions" => Some(m.metrics.exceptions as f64),
        "magic_numbers" => Some(m.metrics.magic_numbers as f64),
        "contributors" => evo.map(|e| e.contributors as f64),
        "modifications" => evo.map(|e| e.modifications as f64),
        "expertise" => evo.map(|e| e.expertise_f64()),
        "mutation_score" => s.score_f64(),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupMedians {
    pub best: Option<f64>,
    pub random: Option<f64>,
    pub worst: Option<f64>,
}

/// Best-vs-worst comparison of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonResult {
    pub metric: String,
    pub medians: GroupMedians,
    pub mann_whitney_u: Option<f64>,
    pub p_value: Option<f64>,
    pub exact_p: Option<bool>,
    pub significant: Option<bool>,
    pub cohens_d: Option<f64>,
    pub effect_label: Option<EffectLabel>,
    /// Why a statistic is missing.
    pub note: Option<String>,
}

fn compare(metric: &str, groups: &StudyGroups, values: &HashMap<&str, f64>, alpha: f64) -> ComparisonResult {
    let sample = |ids: &[String]| -> Vec<f64> { ids.iter().filter_map(|id| values.get(id.as_str()).copied()).collect() };
    let (best, random, worst) = (sample(&groups.best), sample(&groups.random), sample(&groups.worst));
    let medians = GroupMedians { best: median(&best), random: median(&random), worst: median(&worst) };
    let mut result = ComparisonResult {
        metric: metric.to_string(),
        medians,
        mann_whitney_u: None,
        p_value: None,
        exact_p: None,
        significant: None,
        cohens_d: None,
        effect_label: None,
        note: None,
    };
    if best.is_empty() || worst.is_empty() {
        result.note = Some("metric unavailable for the best or worst group".into());
        return result;
    }
    let mw = mann_whitney_u(&best, &worst);
    result.mann_whitney_u = Some(mw.u_a);
    result.p_value = Some(mw.p);
    result.exact_p = Some(mw.exact);
    result.significant = Some(mw.p < alpha);
    match cohens_d(&best, &worst) {
        Ok(d) => {
            result.cohens_d = Some(d);
            result.effect_label = Some(effect_label(d));
        }
        Err(e) => result.note = Some(e.to_string()),
    }
    result
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmellPrevalence {
    pub smell: Smell,
    pub best_count: u32,
    pub worst_count: u32,
    /// Percent of best+worst occurrences; `None` when there are none.
    pub best_share: Option<f64>,
    pub worst_share: Option<f64>,
    pub zero_occurrences: bool,
}

pub fn smell_prevalence(groups: &StudyGroups, smells: &HashMap<&str, &SmellReport>) -> Vec<SmellPrevalence> {
    let count = |ids: &[String], s: Smell| ids.iter().filter(|id| smells.get(id.as_str()).is_some_and(|r| r.has(s))).count() as u32;
    Smell::ALL
        .iter()
        .map(|&smell| {
            let (b, w) = (count(&groups.best, smell), count(&groups.worst, smell));
            let total = b + w;
            let share = |c: u32| (total > 0).then(|| 100.0 * c as f64 / total as f64);
            SmellPrevalence {
                smell,
                best_count: b,
                worst_count: w,
                best_share: share(b),
                worst_share: share(w),
                zero_occurrences: total == 0,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub k: usize,
    pub seed: u64,
    pub alpha: f64,
    pub random_policy: RandomPolicy,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions { k: 100, seed: 0, alpha: 0.05, random_policy: RandomPolicy::Disjoint }
    }
}

/// Everything derived from a matrix and the inspected methods.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub scores: MatrixScores,
    /// Selected test ids, in baseline order.
    pub selected: Vec<String>,
    pub excluded: BTreeMap<String, Exclusion>,
    /// `Err` when too few methods were selected to form groups.
    pub groups: Result<StudyGroups, String>,
    pub comparisons: Vec<ComparisonResult>,
    pub prevalence: Vec<SmellPrevalence>,
}

pub fn analyze(matrix: &OutcomeMatrix, methods: &[InspectedMethod], opts: &StudyOptions) -> StudyReport {
    let scores = score_matrix(matrix);
    let (selected, excluded) = select_test_methods(methods, &scores.methods);
    let by_score: HashMap<&str, &MethodScore> = scores.methods.iter().map(|s| (s.test_id.as_str(), s)).collect();
    let by_method: HashMap<&str, &InspectedMethod> = methods.iter().map(|m| (m.id.as_str(), m)).collect();
    let population: Vec<&MethodScore> = selected.iter().map(|id| by_score[id.as_str()]).collect();

    let (groups, comparisons, prevalence) = match select_groups(&population, opts.k, opts.seed, opts.random_policy) {
        Ok(groups) => {
            let comparisons = METRICS
                .iter()
                .map(|&metric| {
                    let values: HashMap<&str, f64> = selected
                        .iter()
                        .filter_map(|id| {
                            let v = metric_value(metric, by_method[id.as_str()], by_score[id.as_str()])?;
                            Some((id.as_str(), v))
                        })
                        .collect();
                    compare(metric, &groups, &values, opts.alpha)
                })
                .collect();
            let smells: HashMap<&str, &SmellReport> = selected.iter().map(|id| (id.as_str(), &by_method[id.as_str()].smells)).collect();
            let prevalence = smell_prevalence(&groups, &smells);
            (Ok(groups), comparisons, prevalence)
        }
        Err(e) => {
            log::warn!("no group comparison: {e}");
            (Err(e.to_string()), Vec::new(), Vec::new())
        }
    };
    StudyReport { scores, selected, excluded, groups, comparisons, prevalence }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Outcome;
    use crate::scoring::method_score;

    fn scores(spec: &[(&str, u32, u32)]) -> Vec<MethodScore> {
        spec.iter()
            .map(|&(id, killed, survived)| {
                let col = std::iter::repeat(Outcome::Fail)
                    .take(killed as usize)
                    .chain(std::iter::repeat(Outcome::Pass).take(survived as usize));
                method_score(id, col)
            })
            .collect()
    }

    #[test]
    fn groups_follow_tie_break_and_are_disjoint() {
        let s = scores(&[
            ("s1", 2, 0),
            ("s2", 2, 0),
            ("s3", 1, 1),
            ("t1", 2, 0),
            ("t2", 2, 0),
            ("t3", 2, 0),
            ("t4", 1, 1),
            ("t5", 0, 2),
            ("t6", 0, 2),
        ]);
        let refs: Vec<&MethodScore> = s.iter().collect();
        let g = select_groups(&refs, 2, 7, RandomPolicy::Disjoint).unwrap();
        assert_eq!(g.best, vec!["s1", "s2"]);
        assert_eq!(g.worst, vec!["t6", "t5"]);
        assert_eq!(g.random.len(), 2);
        assert!(g.random.iter().all(|r| !g.best.contains(r) && !g.worst.contains(r)));
        assert_eq!(g, select_groups(&refs, 2, 7, RandomPolicy::Disjoint).unwrap());
    }

    #[test]
    fn k_shrinks_and_small_populations_fail() {
        let s = scores(&[("a", 1, 0), ("b", 0, 1), ("c", 1, 1), ("d", 1, 2)]);
        let refs: Vec<&MethodScore> = s.iter().collect();
        let g = select_groups(&refs, 100, 0, RandomPolicy::Disjoint).unwrap();
        assert_eq!((g.requested_k, g.k), (100, 1));
        assert!(matches!(select_groups(&refs[..2], 1, 0, RandomPolicy::Disjoint), Err(StudyError::InsufficientPopulation(2))));
    }

    #[test]
    fn prevalence_shares() {
        let groups = StudyGroups {
            requested_k: 25,
            k: 25,
            seed: 0,
            random_policy: RandomPolicy::Disjoint,
            best: (0..25).map(|i| format!("b{i}")).collect(),
            worst: (0..25).map(|i| format!("w{i}")).collect(),
            random: vec![],
        };
        let on: SmellReport = [Smell::GeneralFixture].into_iter().collect();
        let mut smells: HashMap<&str, &SmellReport> = HashMap::new();
        for id in groups.best.iter().take(6).chain(groups.worst.iter().take(19)) {
            smells.insert(id.as_str(), &on);
        }
        let p = smell_prevalence(&groups, &smells);
        let gf = p.iter().find(|x| x.smell == Smell::GeneralFixture).unwrap();
        assert_eq!((gf.best_share, gf.worst_share), (Some(24.0), Some(76.0)));
        let sleepy = p.iter().find(|x| x.smell == Smell::SleepyTest).unwrap();
        assert!(sleepy.zero_occurrences);
        assert_eq!(sleepy.best_share, None);
    }
}
