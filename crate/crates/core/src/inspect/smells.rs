use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::{assertions_in, exception_count, magic_number_count, Body};
use super::{in_name_set, ClassContext, InspectRules};
use crate::frontend::{MethodRecord, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Smell {
    AssertionRoulette,
    DuplicateAssert,
    ConditionalTestLogic,
    DependentTest,
    SleepyTest,
    SensitiveEquality,
    GeneralFixture,
    MagicNumberTest,
    ExceptionCatchingThrowing,
    UnknownTest,
}

impl Smell {
    pub const ALL: [Smell; 10] = [
        Smell::AssertionRoulette,
        Smell::DuplicateAssert,
        Smell::ConditionalTestLogic,
        Smell::DependentTest,
        Smell::SleepyTest,
        Smell::SensitiveEquality,
        Smell::GeneralFixture,
        Smell::MagicNumberTest,
        Smell::ExceptionCatchingThrowing,
        Smell::UnknownTest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Smell::AssertionRoulette => "ASSERTION_ROULETTE",
            Smell::DuplicateAssert => "DUPLICATE_ASSERT",
            Smell::ConditionalTestLogic => "CONDITIONAL_TEST_LOGIC",
            Smell::DependentTest => "DEPENDENT_TEST",
            Smell::SleepyTest => "SLEEPY_TEST",
            Smell::SensitiveEquality => "SENSITIVE_EQUALITY",
            Smell::GeneralFixture => "GENERAL_FIXTURE",
            Smell::MagicNumberTest => "MAGIC_NUMBER_TEST",
            Smell::ExceptionCatchingThrowing => "EXCEPTION_CATCHING_THROWING",
            Smell::UnknownTest => "UNKNOWN_TEST",
        }
    }
}

impl fmt::Display for Smell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Smells present in one method. Serializes as a map with all ten keys.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SmellReport {
    present: BTreeSet<Smell>,
}

impl SmellReport {
    pub fn has(&self, s: Smell) -> bool {
        self.present.contains(&s)
    }

    pub fn insert(&mut self, s: Smell) {
        self.present.insert(s);
    }

    pub fn iter(&self) -> impl Iterator<Item = Smell> + '_ {
        self.present.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }
}

impl FromIterator<Smell> for SmellReport {
    fn from_iter<I: IntoIterator<Item = Smell>>(iter: I) -> Self {
        SmellReport { present: iter.into_iter().collect() }
    }
}

impl Serialize for SmellReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, bool> = Smell::ALL.iter().map(|x| (x.as_str(), self.has(*x))).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SmellReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<Smell, bool>::deserialize(d)?;
        Ok(map.into_iter().filter(|(_, on)| *on).map(|(s, _)| s).collect())
    }
}

const BRANCH_KEYWORDS: [&str; 5] = ["if", "elif", "else", "for", "while"];

pub fn detect_smells(m: &MethodRecord, ctx: &ClassContext, rules: &InspectRules) -> SmellReport {
    let body = Body::new(m);
    let assertions = assertions_in(&body, rules);
    let mut report = SmellReport::default();
    let mut flag = |s: Smell, on: bool| {
        if on {
            report.insert(s);
        }
    };

    let unmessaged = assertions.iter().filter(|a| !a.has_message).count();
    flag(Smell::AssertionRoulette, unmessaged > 1);

    let mut seen = BTreeSet::new();
    let duplicate = assertions.iter().any(|a| {
        let args: Vec<Vec<&str>> = a.args.iter().map(|arg| arg.iter().map(|&i| body.text(i)).collect()).collect();
        !seen.insert((a.name.as_str(), args))
    });
    flag(Smell::DuplicateAssert, duplicate);

    let kw = |words: &[&str]| body.toks.iter().any(|t| t.kind == TokenKind::Keyword && words.contains(&t.text.as_str()));
    flag(Smell::ConditionalTestLogic, kw(&BRANCH_KEYWORDS));
    flag(Smell::ExceptionCatchingThrowing, kw(&["try", "except", "raise"]));

    flag(
        Smell::DependentTest,
        body.toks
            .iter()
            .any(|t| t.kind == TokenKind::Identifier && t.text != m.name && ctx.sibling_tests.contains(&t.text)),
    );

    flag(
        Smell::SleepyTest,
        (0..body.toks.len()).any(|i| {
            body.toks[i].kind == TokenKind::Identifier && body.is_call(i) && in_name_set(body.text(i), &rules.sleep_names)
        }),
    );

    let in_args: BTreeSet<usize> = assertions.iter().flat_map(|a| a.args.iter().flatten().copied()).collect();
    flag(
        Smell::SensitiveEquality,
        in_args.iter().any(|&i| {
            body.toks[i].kind == TokenKind::Identifier
                && body.is_call(i)
                && in_args.contains(&(i + 1))
                && in_name_set(body.text(i), &rules.string_conversion_names)
        }),
    );

    let referenced: BTreeSet<&str> = body
        .toks
        .windows(3)
        .filter(|w| w[0].text == "self" && w[1].text == "." && w[2].kind == TokenKind::Identifier)
        .map(|w| w[2].text.as_str())
        .collect();
    flag(Smell::GeneralFixture, ctx.fixture_fields.iter().any(|f| !referenced.contains(f.as_str())));

    flag(Smell::MagicNumberTest, magic_number_count(&body, &assertions) > 0);

    flag(Smell::UnknownTest, assertions.is_empty() && exception_count(m, &body, rules) == 0);
    report
}
