//! Suite-level and per-test-method mutation scores.
//!
//! The two levels treat time-outs differently. At suite level a time-out
//! kills the mutant. At method level time-out cells are dropped from both
//! the numerator and the denominator, so a test's score is
//! `killed / (killed + survived)` with killed counting only failures and
//! errors.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{Outcome, OutcomeMatrix};

pub type Score = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MutantStatus {
    KilledFailure,
    KilledError,
    KilledTimeout,
    Survived,
    Uncovered,
}

impl MutantStatus {
    pub fn is_killed(self) -> bool {
        matches!(self, MutantStatus::KilledFailure | MutantStatus::KilledError | MutantStatus::KilledTimeout)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MutantStatus::KilledFailure => "KILLED_FAILURE",
            MutantStatus::KilledError => "KILLED_ERROR",
            MutantStatus::KilledTimeout => "KILLED_TIMEOUT",
            MutantStatus::Survived => "SURVIVED",
            MutantStatus::Uncovered => "UNCOVERED",
        }
    }
}

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("no mutants were generated; the suite score is undefined")]
    EmptyInput,
}

/// Status of one mutant from its matrix row. Mixed kills resolve as
/// failure, then error, then time-out.
pub fn classify_mutant<I>(row: I) -> MutantStatus
where
    I: IntoIterator<Item = Outcome>,
{
    let (mut any, mut fail, mut error, mut timeout) = (false, false, false, false);
    for o in row {
        any = true;
        match o {
            Outcome::Pass => {}
            Outcome::Fail => fail = true,
            Outcome::Error => error = true,
            Outcome::Timeout => timeout = true,
        }
    }
    match (any, fail, error, timeout) {
        (false, ..) => MutantStatus::Uncovered,
        (_, true, _, _) => MutantStatus::KilledFailure,
        (_, _, true, _) => MutantStatus::KilledError,
        (_, _, _, true) => MutantStatus::KilledTimeout,
        _ => MutantStatus::Survived,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteScore {
    pub killed: u64,
    pub survived: u64,
    pub uncovered: u64,
    pub generated: u64,
    pub score: Score,
}

impl SuiteScore {
    pub fn as_f64(&self) -> f64 {
        ratio_f64(self.score)
    }
}

pub fn suite_score(statuses: &[MutantStatus]) -> Result<SuiteScore, ScoringError> {
    if statuses.is_empty() {
        return Err(ScoringError::EmptyInput);
    }
    let killed = statuses.iter().filter(|s| s.is_killed()).count() as u64;
    let survived = statuses.iter().filter(|s| **s == MutantStatus::Survived).count() as u64;
    let generated = statuses.len() as u64;
    Ok(SuiteScore {
        killed,
        survived,
        uncovered: generated - killed - survived,
        generated,
        score: Ratio::new(killed, generated),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodScore {
    pub test_id: String,
    pub killed: u64,
    pub survived: u64,
    pub timeouts_excluded: u64,
    pub covered: u64,
    /// `None` when every covered cell timed out (or nothing is covered).
    pub score: Option<Score>,
}

impl MethodScore {
    pub fn score_f64(&self) -> Option<f64> {
        self.score.map(ratio_f64)
    }
}

pub fn method_score<I>(test_id: &str, column: I) -> MethodScore
where
    I: IntoIterator<Item = Outcome>,
{
    let (mut killed, mut survived, mut timeouts) = (0u64, 0u64, 0u64);
    for o in column {
        match o {
            Outcome::Fail | Outcome::Error => killed += 1,
            Outcome::Pass => survived += 1,
            Outcome::Timeout => timeouts += 1,
        }
    }
    let denom = killed + survived;
    MethodScore {
        test_id: test_id.to_string(),
        killed,
        survived,
        timeouts_excluded: timeouts,
        covered: denom + timeouts,
        score: (denom > 0).then(|| Ratio::new(killed, denom)),
    }
}

pub fn ratio_f64(r: Score) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Statuses, suite score and per-test scores for a whole matrix.
#[derive(Debug, Clone)]
pub struct MatrixScores {
    /// In mutant order.
    pub statuses: Vec<(u32, MutantStatus)>,
    pub suite: Result<SuiteScore, ScoringError>,
    /// In baseline test order.
    pub methods: Vec<MethodScore>,
}

impl MatrixScores {
    pub fn status_of(&self, mutant: u32) -> Option<MutantStatus> {
        self.statuses.iter().find(|(id, _)| *id == mutant).map(|(_, s)| *s)
    }

    pub fn method(&self, test_id: &str) -> Option<&MethodScore> {
        self.methods.iter().find(|m| m.test_id == test_id)
    }
}

pub fn score_matrix(matrix: &OutcomeMatrix) -> MatrixScores {
    let statuses: Vec<(u32, MutantStatus)> = matrix
        .mutants
        .iter()
        .map(|m| (m.id, classify_mutant(matrix.row(m.id).map(|(_, o)| o.outcome))))
        .collect();
    let just_statuses: Vec<MutantStatus> = statuses.iter().map(|(_, s)| *s).collect();
    let columns = matrix.columns();
    let methods = matrix
        .tests
        .iter()
        .map(|t| {
            let col = columns.get(t.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            method_score(t, col.iter().map(|(_, o)| o.outcome))
        })
        .collect();
    MatrixScores { suite: suite_score(&just_statuses), statuses, methods }
}
