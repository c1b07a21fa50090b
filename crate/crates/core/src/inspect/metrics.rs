use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{in_name_set, InspectRules};
use crate::frontend::{marker_matches, MethodRecord, SourceToken, TokenKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticMetrics {
    pub sloc: u32,
    pub bad_asserts: u32,
    pub exceptions: u32,
    pub magic_numbers: u32,
}

/// One assertion call or statement in a method body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    /// Call name, or `assert` for the assertion statement.
    pub name: String,
    /// Top-level arguments, each as significant-token indices into the body.
    pub args: Vec<Vec<usize>>,
    pub has_message: bool,
}

/// Significant body tokens, each flagged when a statement-ending newline
/// precedes it.
pub(crate) struct Body<'a> {
    pub toks: Vec<&'a SourceToken>,
    pub newline_before: Vec<bool>,
}

impl<'a> Body<'a> {
    pub fn new(m: &'a MethodRecord) -> Self {
        let mut toks = Vec::new();
        let mut newline_before = Vec::new();
        let mut pending_nl = false;
        for t in &m.body_tokens {
            match t.kind {
                TokenKind::Whitespace => {
                    pending_nl |= t.text.match_indices('\n').any(|(i, _)| !t.text[..i].trim_end_matches('\r').ends_with('\\'));
                }
                TokenKind::Comment => {}
                _ => {
                    toks.push(t);
                    newline_before.push(pending_nl);
                    pending_nl = false;
                }
            }
        }
        Body { toks, newline_before }
    }

    pub fn text(&self, i: usize) -> &str {
        &self.toks[i].text
    }

    pub fn is_call(&self, i: usize) -> bool {
        self.toks.get(i + 1).map(|t| t.text == "(").unwrap_or(false)
    }

    /// Index of the bracket closing the one at `open`.
    fn matching_close(&self, open: usize) -> usize {
        let mut depth = 0;
        for i in open..self.toks.len() {
            match self.text(i) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    depth -= 1;
                    if depth == 0 {
                        return i;
                    }
                }
                _ => {}
            }
        }
        self.toks.len()
    }

    /// Splits `[from, to)` at top-level commas, dropping empty pieces.
    fn split_args(&self, from: usize, to: usize) -> Vec<Vec<usize>> {
        let mut args = vec![Vec::new()];
        let mut depth = 0;
        for i in from..to {
            match self.text(i) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                "," if depth == 0 => {
                    args.push(Vec::new());
                    continue;
                }
                _ => {}
            }
            args.last_mut().expect("non-empty").push(i);
        }
        args.retain(|a| !a.is_empty());
        args
    }

    /// End (exclusive) of the simple statement starting at `from`.
    fn statement_end(&self, from: usize) -> usize {
        let mut depth = 0;
        for i in from..self.toks.len() {
            if i > from && depth == 0 && self.newline_before[i] {
                return i;
            }
            match self.text(i) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ";" if depth == 0 => return i,
                _ => {}
            }
        }
        self.toks.len()
    }
}

/// Positional arity of well-known assertion calls; a call passing more
/// positional arguments than this carries a message.
fn arity(name: &str) -> Option<usize> {
    match name {
        "assertTrue" | "assertFalse" | "assertIsNone" | "assertIsNotNone" | "assertNull" | "assertNotNull" | "assert_" => Some(1),
        // Variadic: only an explicit keyword message counts.
        "assertRaises" | "assertRaisesRegex" | "assertWarns" | "assertWarnsRegex" | "assertLogs" | "assertNoLogs" => None,
        _ => Some(2),
    }
}

fn is_keyword_arg(body: &Body<'_>, arg: &[usize]) -> Option<String> {
    match arg {
        [name, eq, ..] if body.toks[*name].kind == TokenKind::Identifier && body.text(*eq) == "=" => {
            Some(body.text(*name).to_string())
        }
        _ => None,
    }
}

pub(crate) fn assertions_in(body: &Body<'_>, rules: &InspectRules) -> Vec<Assertion> {
    let mut out = Vec::new();
    for i in 0..body.toks.len() {
        let t = body.toks[i];
        if t.kind == TokenKind::Keyword && t.text == "assert" {
            let end = body.statement_end(i);
            let args = body.split_args(i + 1, end);
            out.push(Assertion { name: "assert".into(), has_message: args.len() > 1, args });
        } else if t.kind == TokenKind::Identifier
            && rules.is_assertion_name(&t.text)
            && body.is_call(i)
            && !(i > 0 && body.text(i - 1) == "def")
        {
            let close = body.matching_close(i + 1);
            let args = body.split_args(i + 2, close);
            let keywords: Vec<String> = args.iter().filter_map(|a| is_keyword_arg(body, a)).collect();
            let positional = args.len() - keywords.len();
            let keyword_msg = keywords.iter().any(|k| k == "msg" || k == "message");
            let has_message = keyword_msg || arity(&t.text).map(|n| positional > n).unwrap_or(false);
            out.push(Assertion { name: t.text.clone(), args, has_message });
        }
    }
    out
}

pub fn find_assertions(m: &MethodRecord, rules: &InspectRules) -> Vec<Assertion> {
    assertions_in(&Body::new(m), rules)
}

fn numeric_value(text: &str) -> Option<f64> {
    let t: String = text.chars().filter(|c| *c != '_').collect();
    let t = t.trim_end_matches(['j', 'J', 'l', 'L']);
    let lower = t.to_ascii_lowercase();
    for (prefix, radix) in [("0x", 16), ("0o", 8), ("0b", 2)] {
        if let Some(digits) = lower.strip_prefix(prefix) {
            return u128::from_str_radix(digits, radix).ok().map(|v| v as f64);
        }
    }
    lower.parse::<f64>().ok()
}

/// Numeric literals inside assertion arguments, excluding -1, 0 and 1.
pub(crate) fn magic_number_count(body: &Body<'_>, assertions: &[Assertion]) -> u32 {
    let inside: BTreeSet<usize> = assertions.iter().flat_map(|a| a.args.iter().flatten().copied()).collect();
    inside
        .into_iter()
        .filter(|&i| body.toks[i].kind == TokenKind::NumberLiteral)
        .filter(|&i| match numeric_value(body.text(i)) {
            Some(v) => v != 0.0 && v != 1.0,
            None => true,
        })
        .count() as u32
}

/// `raise` statements, `except` clauses, and expected-exception markers or
/// calls.
pub(crate) fn exception_count(m: &MethodRecord, body: &Body<'_>, rules: &InspectRules) -> u32 {
    let structural = body
        .toks
        .iter()
        .filter(|t| t.kind == TokenKind::Keyword && (t.text == "raise" || t.text == "except"))
        .count();
    let calls = (0..body.toks.len())
        .filter(|&i| {
            body.toks[i].kind == TokenKind::Identifier
                && body.is_call(i)
                && in_name_set(body.text(i), &rules.expected_exception_names)
        })
        .count();
    let markers = m.markers.iter().filter(|mk| marker_matches(mk, &rules.expected_exception_names)).count();
    (structural + calls + markers) as u32
}

pub(crate) fn sloc(body: &Body<'_>) -> u32 {
    let lines: BTreeSet<u32> = body.toks.iter().flat_map(|t| t.line..=t.last_line()).collect();
    lines.len() as u32
}

pub fn compute_static_metrics(m: &MethodRecord, rules: &InspectRules) -> StaticMetrics {
    let body = Body::new(m);
    let assertions = assertions_in(&body, rules);
    StaticMetrics {
        sloc: sloc(&body),
        bad_asserts: assertions.iter().filter(|a| !a.has_message).count() as u32,
        exceptions: exception_count(m, &body, rules),
        magic_numbers: magic_number_count(&body, &assertions),
    }
}
