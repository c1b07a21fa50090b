//! Test-method selection, static metrics, and test-smell detection.

mod metrics;
mod smells;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use metrics::{compute_static_metrics, find_assertions, Assertion, StaticMetrics};
pub use smells::{detect_smells, Smell, SmellReport};

use crate::frontend::{MethodRecord, TokenKind};
use crate::scoring::MethodScore;

/// Name sets the detectors key on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InspectRules {
    /// Calls whose name starts with one of these are assertions.
    pub assert_prefixes: BTreeSet<String>,
    /// Additional exact assertion names.
    pub assert_names: BTreeSet<String>,
    pub sleep_names: BTreeSet<String>,
    pub setup_names: BTreeSet<String>,
    pub string_conversion_names: BTreeSet<String>,
    /// Calls and markers that declare an expected exception.
    pub expected_exception_names: BTreeSet<String>,
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for InspectRules {
    fn default() -> Self {
        InspectRules {
            assert_prefixes: set(&["assert"]),
            assert_names: BTreeSet::new(),
            sleep_names: set(&["sleep"]),
            setup_names: set(&["setUp", "setup_method", "setup"]),
            string_conversion_names: set(&["str", "repr", "toString", "__str__", "__repr__"]),
            expected_exception_names: set(&["assertRaises", "assertRaisesRegex", "raises"]),
        }
    }
}

impl InspectRules {
    pub fn is_assertion_name(&self, name: &str) -> bool {
        self.assert_names.contains(name) || self.assert_prefixes.iter().any(|p| name.starts_with(p.as_str()))
    }
}

/// Matches `name` or its last dotted segment against `set`.
pub(crate) fn in_name_set(name: &str, set: &BTreeSet<String>) -> bool {
    set.iter().any(|entry| entry == name || entry.rsplit('.').next() == Some(name))
}

/// Sibling tests and shared fixture fields of a test's container.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassContext {
    /// Simple names of the test methods in the same container.
    pub sibling_tests: BTreeSet<String>,
    /// Fields assigned (or annotated) as `self.<field>` by a setup method.
    pub fixture_fields: BTreeSet<String>,
}

/// Builds one context per container id from all methods of a project.
pub fn class_contexts(methods: &[&MethodRecord], rules: &InspectRules) -> HashMap<String, ClassContext> {
    let mut contexts: HashMap<String, ClassContext> = HashMap::new();
    for m in methods {
        let ctx = contexts.entry(m.container_id()).or_default();
        if m.is_test {
            ctx.sibling_tests.insert(m.name.clone());
        }
        if rules.setup_names.contains(&m.name) {
            ctx.fixture_fields.extend(self_assignments(m));
        }
    }
    contexts
}

fn self_assignments(m: &MethodRecord) -> BTreeSet<String> {
    let sig: Vec<_> = m.body_tokens.iter().filter(|t| !t.kind.is_trivia()).collect();
    sig.windows(4)
        .filter(|w| {
            w[0].text == "self"
                && w[1].text == "."
                && w[2].kind == TokenKind::Identifier
                && matches!((w[3].kind, w[3].text.as_str()), (TokenKind::Operator, "=") | (TokenKind::Punctuation, ":"))
        })
        .map(|w| w[2].text.clone())
        .collect()
}

/// Why a scored or discovered test was left out of the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    NotATest,
    /// Reported by the runner but has no static definition.
    NotStaticallyDefined,
    Skipped,
    /// No mutant covered, or every covered cell timed out.
    UndefinedScore,
}

/// What selection needs to know about a statically discovered method.
pub trait TestMethodInfo {
    fn method_id(&self) -> &str;
    fn is_test(&self) -> bool;
    fn is_skipped(&self) -> bool;
}

impl TestMethodInfo for MethodRecord {
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

/// Applies the four selection rules and returns the selected ids in score
/// order, together with the reason for every exclusion.
pub fn select_test_methods<M: TestMethodInfo>(methods: &[M], scores: &[MethodScore]) -> (Vec<String>, BTreeMap<String, Exclusion>) {
    let by_id: HashMap<&str, &M> = methods.iter().map(|m| (m.method_id(), m)).collect();
    let mut selected = Vec::new();
    let mut excluded = BTreeMap::new();
    for s in scores {
        let reason = match by_id.get(s.test_id.as_str()) {
            None => Some(Exclusion::NotStaticallyDefined),
            Some(m) if !m.is_test() => Some(Exclusion::NotATest),
            Some(m) if m.is_skipped() => Some(Exclusion::Skipped),
            Some(_) if s.score.is_none() || s.covered == 0 => Some(Exclusion::UndefinedScore),
            Some(_) => None,
        };
        match reason {
            Some(r) => {
                excluded.insert(s.test_id.clone(), r);
            }
            None => selected.push(s.test_id.clone()),
        }
    }
    (selected, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{classify_test, extract_methods, tokenize, TestRules};
    use crate::matrix::Outcome;
    use crate::scoring::method_score;

    fn parse(src: &str) -> Vec<MethodRecord> {
        let mut ms = extract_methods(&tokenize(src.as_bytes(), "t.py").unwrap(), "t.py");
        for m in &mut ms {
            classify_test(m, &TestRules::default());
        }
        ms
    }

    #[test]
    fn selection_rules() {
        let methods = parse(
            "\
def testA(): assert f() == 1
@unittest.skip('x')
def testSkipped(): assert f() == 1
def testNothing(): assert True
def testTimeouts(): assert f() == 1
def helper(): pass
",
        );
        let scores = vec![
            method_score("t.py::testA", [Outcome::Fail]),
            method_score("t.py::testSkipped", [Outcome::Fail]),
            method_score("t.py::testNothing", []),
            method_score("t.py::testTimeouts", [Outcome::Timeout]),
            method_score("t.py::helper", [Outcome::Pass]),
            method_score("t.py::testDynamic", [Outcome::Pass]),
        ];
        let (selected, excluded) = select_test_methods(&methods, &scores);
        assert_eq!(selected, vec!["t.py::testA"]);
        assert_eq!(excluded["t.py::testSkipped"], Exclusion::Skipped);
        assert_eq!(excluded["t.py::testNothing"], Exclusion::UndefinedScore);
        assert_eq!(excluded["t.py::testTimeouts"], Exclusion::UndefinedScore);
        assert_eq!(excluded["t.py::helper"], Exclusion::NotATest);
        assert_eq!(excluded["t.py::testDynamic"], Exclusion::NotStaticallyDefined);
    }

    #[test]
    fn contexts_collect_siblings_and_fixture_fields() {
        let methods = parse(
            "\
class TestX:
    def setUp(self):
        self.a = 1
        self.b: int = 2
        self.c = self.a
    def testOne(self): pass
    def testTwo(self): pass
def testTop(): pass
",
        );
        let refs: Vec<_> = methods.iter().collect();
        let ctx = class_contexts(&refs, &InspectRules::default());
        let x = &ctx["t.py::TestX"];
        assert_eq!(x.sibling_tests, set(&["testOne", "testTwo"]));
        assert_eq!(x.fixture_fields, set(&["a", "b", "c"]));
        assert_eq!(ctx["t.py"].sibling_tests, set(&["testTop"]));
    }

    #[test]
    fn dotted_name_sets() {
        let s = set(&["time.sleep"]);
        assert!(in_name_set("sleep", &s));
        assert!(in_name_set("time.sleep", &s));
        assert!(!in_name_set("nap", &s));
    }
}
