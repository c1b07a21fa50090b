//! The per-(mutant, test) outcome matrix.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::mutation::Mutant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
    Timeout,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Pass, Outcome::Fail, Outcome::Error, Outcome::Timeout];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub outcome: Outcome,
    pub duration_ms: u64,
}

impl TestOutcome {
    pub fn new(outcome: Outcome, duration_ms: u64) -> Self {
        TestOutcome { outcome, duration_ms }
    }
}

/// One serialized matrix cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub mutant: u32,
    pub test: String,
    pub outcome: Outcome,
    pub duration_ms: u64,
}

/// Sparse outcome matrix. A missing cell means the test does not cover the
/// mutant; a mutant with no cells at all is uncovered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawMatrix", from = "RawMatrix")]
pub struct OutcomeMatrix {
    pub mutants: Vec<Mutant>,
    /// Test ids in baseline order.
    pub tests: Vec<String>,
    entries: BTreeMap<(u32, String), TestOutcome>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    mutants: Vec<Mutant>,
    tests: Vec<String>,
    entries: Vec<MatrixEntry>,
}

impl From<OutcomeMatrix> for RawMatrix {
    fn from(m: OutcomeMatrix) -> Self {
        RawMatrix {
            entries: m.entries().collect(),
            mutants: m.mutants,
            tests: m.tests,
        }
    }
}

impl From<RawMatrix> for OutcomeMatrix {
    fn from(raw: RawMatrix) -> Self {
        let mut m = OutcomeMatrix::new(raw.mutants, raw.tests);
        for e in raw.entries {
            m.insert(e.mutant, e.test, TestOutcome::new(e.outcome, e.duration_ms));
        }
        m
    }
}

impl OutcomeMatrix {
    pub fn new(mutants: Vec<Mutant>, tests: Vec<String>) -> Self {
        OutcomeMatrix { mutants, tests, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, mutant: u32, test: impl Into<String>, outcome: TestOutcome) -> Option<TestOutcome> {
        self.entries.insert((mutant, test.into()), outcome)
    }

    pub fn get(&self, mutant: u32, test: &str) -> Option<&TestOutcome> {
        self.entries.get(&(mutant, test.to_string()))
    }

    pub fn contains(&self, mutant: u32, test: &str) -> bool {
        self.get(mutant, test).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cells in (mutant id, test id) order.
    pub fn entries(&self) -> impl Iterator<Item = MatrixEntry> + '_ {
        self.entries.iter().map(|((m, t), o)| MatrixEntry {
            mutant: *m,
            test: t.clone(),
            outcome: o.outcome,
            duration_ms: o.duration_ms,
        })
    }

    /// All cells for one mutant.
    pub fn row(&self, mutant: u32) -> impl Iterator<Item = (&str, &TestOutcome)> {
        self.entries
            .range((mutant, String::new())..)
            .take_while(move |((m, _), _)| *m == mutant)
            .map(|((_, t), o)| (t.as_str(), o))
    }

    /// All cells for one test.
    pub fn column<'a>(&'a self, test: &'a str) -> impl Iterator<Item = (u32, &'a TestOutcome)> + 'a {
        self.entries.iter().filter(move |((_, t), _)| t == test).map(|((m, _), o)| (*m, o))
    }

    /// Every column at once, keyed by test id.
    pub fn columns(&self) -> HashMap<&str, Vec<(u32, TestOutcome)>> {
        let mut cols: HashMap<&str, Vec<(u32, TestOutcome)>> = HashMap::new();
        for ((m, t), o) in &self.entries {
            cols.entry(t.as_str()).or_default().push((*m, *o));
        }
        cols
    }

    /// Canonical outcome-only rendering: timing-free, so equal across
    /// reruns and worker counts.
    pub fn outcome_fingerprint(&self) -> String {
        let mut s = String::new();
        for ((m, t), o) in &self.entries {
            s.push_str(&format!("{m}\t{t}\t{:?}\n", o.outcome));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_columns() {
        let mut m = OutcomeMatrix::new(vec![], vec!["a".into(), "b".into()]);
        m.insert(2, "b", TestOutcome::new(Outcome::Pass, 1));
        m.insert(1, "a", TestOutcome::new(Outcome::Fail, 1));
        m.insert(1, "b", TestOutcome::new(Outcome::Timeout, 9));
        assert_eq!(m.row(1).map(|(t, _)| t).collect::<Vec<_>>(), vec!["a", "b"]);
        assert_eq!(m.row(3).count(), 0);
        assert_eq!(m.column("b").map(|(id, _)| id).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(m.columns()["b"].len(), 2);
    }

    #[test]
    fn serde_round_trip() {
        let mut m = OutcomeMatrix::new(vec![], vec!["t".into()]);
        m.insert(1, "t", TestOutcome::new(Outcome::Error, 3));
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains(r#""outcome":"ERROR""#));
        let back: OutcomeMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
