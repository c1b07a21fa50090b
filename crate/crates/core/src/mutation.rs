//! First-order, token-level mutants.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{SourceToken, Span, TokenKind};
use crate::workspace::SourceFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MutationOperator {
    /// Arithmetic operator replacement.
    Aor,
    RorBoundary,
    RorNegate,
    /// Logical connector replacement.
    Lor,
    NotRemoval,
    BoolFlip,
    NumPerturb,
    Incr,
}

impl MutationOperator {
    pub const ALL: [MutationOperator; 8] = [
        MutationOperator::Aor,
        MutationOperator::RorBoundary,
        MutationOperator::RorNegate,
        MutationOperator::Lor,
        MutationOperator::NotRemoval,
        MutationOperator::BoolFlip,
        MutationOperator::NumPerturb,
        MutationOperator::Incr,
    ];

    pub fn id(self) -> &'static str {
        match self {
            MutationOperator::Aor => "AOR",
            MutationOperator::RorBoundary => "ROR-boundary",
            MutationOperator::RorNegate => "ROR-negate",
            MutationOperator::Lor => "LOR",
            MutationOperator::NotRemoval => "NOT-removal",
            MutationOperator::BoolFlip => "BOOL-flip",
            MutationOperator::NumPerturb => "NUM-perturb",
            MutationOperator::Incr => "INCR",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            MutationOperator::Aor => "swap + and -, * and /, replace % with *",
            MutationOperator::RorBoundary => "swap < and <=, > and >=",
            MutationOperator::RorNegate => "swap == and !=, replace < with >= and > with <=",
            MutationOperator::Lor => "swap and/or, && and ||",
            MutationOperator::NotRemoval => "delete a unary negation",
            MutationOperator::BoolFlip => "swap true and false literals",
            MutationOperator::NumPerturb => "replace a numeric literal with 0, or 0 with 1",
            MutationOperator::Incr => "swap += and -=",
        }
    }

    /// Replacement text for `tokens[idx]`, or `None` when the operator does
    /// not apply there. `prev` is the previous non-trivia token.
    pub fn replacement(self, tok: &SourceToken, prev: Option<&SourceToken>) -> Option<String> {
        let text = tok.text.as_str();
        let r = match (self, tok.kind) {
            (MutationOperator::Aor, TokenKind::Operator) if is_binary_position(prev) => match text {
                "+" => "-",
                "-" => "+",
                "*" => "/",
                "/" => "*",
                "%" => "*",
                _ => return None,
            },
            (MutationOperator::RorBoundary, TokenKind::Operator) => match text {
                "<" => "<=",
                "<=" => "<",
                ">" => ">=",
                ">=" => ">",
                _ => return None,
            },
            (MutationOperator::RorNegate, TokenKind::Operator) => match text {
                "==" => "!=",
                "!=" => "==",
                "<" => ">=",
                ">" => "<=",
                _ => return None,
            },
            (MutationOperator::Lor, TokenKind::Keyword) => match text {
                "and" => "or",
                "or" => "and",
                _ => return None,
            },
            (MutationOperator::Lor, TokenKind::Operator) => match text {
                "&&" => "||",
                "||" => "&&",
                _ => return None,
            },
            (MutationOperator::NotRemoval, TokenKind::Keyword) if text == "not" => "",
            (MutationOperator::NotRemoval, TokenKind::Operator) if text == "!" => "",
            (MutationOperator::BoolFlip, TokenKind::BooleanLiteral) => match text {
                "True" => "False",
                "False" => "True",
                "true" => "false",
                "false" => "true",
                _ => return None,
            },
            (MutationOperator::NumPerturb, TokenKind::NumberLiteral) => {
                if is_zero_literal(text) {
                    "1"
                } else {
                    "0"
                }
            }
            (MutationOperator::Incr, TokenKind::Operator) => match text {
                "+=" => "-=",
                "-=" => "+=",
                _ => return None,
            },
            _ => return None,
        };
        Some(r.to_string())
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MutationOperator {
    type Err = MutationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MutationOperator::ALL
            .into_iter()
            .find(|op| op.id() == s)
            .ok_or_else(|| MutationError::UnknownOperator(s.to_string()))
    }
}

impl Serialize for MutationOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for MutationOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A binary operator follows an operand; anything else makes it unary or
/// part of a signature (`*args`).
fn is_binary_position(prev: Option<&SourceToken>) -> bool {
    let Some(p) = prev else { return false };
    match p.kind {
        TokenKind::Identifier
        | TokenKind::NumberLiteral
        | TokenKind::StringLiteral
        | TokenKind::BooleanLiteral => true,
        TokenKind::Keyword => p.text == "None",
        TokenKind::Punctuation => matches!(p.text.as_str(), ")" | "]" | "}"),
        _ => false,
    }
}

fn is_zero_literal(text: &str) -> bool {
    let t = text.trim_end_matches(['j', 'J', 'l', 'L']);
    let lower = t.to_ascii_lowercase();
    if let Some(digits) = ["0x", "0o", "0b"].iter().find_map(|p| lower.strip_prefix(p)) {
        return digits.chars().all(|c| c == '0' || c == '_');
    }
    let mantissa = lower.split('e').next().unwrap_or("");
    mantissa.chars().any(|c| c == '0') && mantissa.chars().all(|c| matches!(c, '0' | '.' | '_'))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: u32,
    pub operator_id: String,
    pub file: String,
    pub span: Span,
    pub line: u32,
    pub original: String,
    pub replacement: String,
}

#[derive(Debug, Error)]
pub enum MutationError {
    #[error("unknown mutation operator `{0}`")]
    UnknownOperator(String),
    #[error("mutant {id} is stale: expected `{expected}` at {file}:{start}..{end}, found `{found}`")]
    StaleMutant { id: u32, file: String, start: usize, end: usize, expected: String, found: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Generates every first-order mutant of the production files.
///
/// Test files are never mutated. Ids are 1-based and assigned in
/// (file path, span, operator id) order.
pub fn generate_mutants(files: &[SourceFile], operators: &[MutationOperator]) -> Vec<Mutant> {
    let mut found = Vec::new();
    for file in files.iter().filter(|f| !f.is_test_file) {
        let mut prev: Option<&SourceToken> = None;
        for tok in &file.tokens {
            if tok.kind.is_trivia() {
                continue;
            }
            for &op in operators {
                if let Some(replacement) = op.replacement(tok, prev) {
                    debug_assert_ne!(replacement, tok.text);
                    found.push((file.path.clone(), tok.span, op.id(), tok.line, tok.text.clone(), replacement));
                }
            }
            prev = Some(tok);
        }
    }
    found.sort_by(|a, b| (&a.0, a.1, a.2).cmp(&(&b.0, b.1, b.2)));
    found.dedup_by(|a, b| (&a.0, a.1, a.2) == (&b.0, b.1, b.2));
    found
        .into_iter()
        .enumerate()
        .map(|(i, (file, span, op, line, original, replacement))| Mutant {
            id: i as u32 + 1,
            operator_id: op.to_string(),
            file,
            span,
            line,
            original,
            replacement,
        })
        .collect()
}

/// Returns `source` with the mutant's span replaced.
pub fn patch_bytes(source: &[u8], m: &Mutant) -> Result<Vec<u8>, MutationError> {
    let current = source.get(m.span.start..m.span.end);
    if current != Some(m.original.as_bytes()) {
        return Err(MutationError::StaleMutant {
            id: m.id,
            file: m.file.clone(),
            start: m.span.start,
            end: m.span.end,
            expected: m.original.clone(),
            found: current.map(|b| String::from_utf8_lossy(b).into_owned()).unwrap_or_default(),
        });
    }
    let mut out = Vec::with_capacity(source.len() + m.replacement.len());
    out.extend_from_slice(&source[..m.span.start]);
    out.extend_from_slice(m.replacement.as_bytes());
    out.extend_from_slice(&source[m.span.end..]);
    Ok(out)
}

/// A mutant written into a workspace. Reverting restores the original
/// bytes; dropping an unreverted patch reverts it on a best-effort basis.
#[derive(Debug)]
pub struct AppliedMutant {
    path: PathBuf,
    original: Vec<u8>,
    reverted: bool,
}

impl AppliedMutant {
    pub fn revert(mut self) -> Result<(), MutationError> {
        self.reverted = true;
        fs::write(&self.path, &self.original).map_err(|source| MutationError::Io { path: self.path.clone(), source })
    }
}

impl Drop for AppliedMutant {
    fn drop(&mut self) {
        if !self.reverted {
            if let Err(e) = fs::write(&self.path, &self.original) {
                log::error!("failed to revert {}: {e}", self.path.display());
            }
        }
    }
}

pub fn apply_mutant(workspace: &Path, m: &Mutant) -> Result<AppliedMutant, MutationError> {
    let path = workspace.join(&m.file);
    let io = |source| MutationError::Io { path: path.clone(), source };
    let original = fs::read(&path).map_err(io)?;
    let patched = patch_bytes(&original, m)?;
    fs::write(&path, patched).map_err(io)?;
    Ok(AppliedMutant { path, original, reverted: false })
}
