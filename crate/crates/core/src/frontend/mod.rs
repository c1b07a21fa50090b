//! Source frontends.
//!
//! A frontend turns raw file bytes into a lossless token stream and a list of
//! method records. Everything downstream (mutation, inspection, history)
//! consumes only [`SourceToken`] and [`MethodRecord`], so adding a new target
//! language means adding a new [`Frontend`] implementation.

mod python;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use python::PythonFrontend;

/// Separator used in qualified method ids: `path::Container::name`.
pub const ID_SEPARATOR: &str = "::";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenKind {
    Identifier,
    Keyword,
    NumberLiteral,
    StringLiteral,
    BooleanLiteral,
    Operator,
    Punctuation,
    Comment,
    Whitespace,
}

impl TokenKind {
    /// Whitespace and comments carry no semantics.
    pub fn is_trivia(self) -> bool {
        matches!(self, TokenKind::Whitespace | TokenKind::Comment)
    }
}

/// Half-open byte range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceToken {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
    /// 1-based line of the token's first byte.
    pub line: u32,
}

impl SourceToken {
    /// Number of the last line this token touches.
    pub fn last_line(&self) -> u32 {
        self.line + self.text.matches('\n').count() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRecord {
    /// `path::Container::name`
    pub id: String,
    /// Simple name of the function.
    pub name: String,
    /// Enclosing classes and functions, outermost first.
    pub container: Vec<String>,
    pub file: String,
    /// Byte range of the whole definition (decorators through last body token).
    pub span: Span,
    /// Inclusive, 1-based.
    pub line_range: (u32, u32),
    /// Tokens after the header colon through the end of the body.
    pub body_tokens: Vec<SourceToken>,
    /// Decorator names with arguments stripped, e.g. `unittest.skip`.
    pub markers: BTreeSet<String>,
    pub is_test: bool,
    pub is_skipped: bool,
}

impl MethodRecord {
    /// Qualified name of the enclosing container (`path::Class`), or the
    /// file path for top-level definitions.
    pub fn container_id(&self) -> String {
        std::iter::once(self.file.as_str())
            .chain(self.container.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(ID_SEPARATOR)
    }

    /// True when this definition sits inside another function.
    pub fn is_nested(&self, enclosing_functions: &BTreeSet<String>) -> bool {
        let mut prefix = self.file.clone();
        for part in &self.container {
            prefix.push_str(ID_SEPARATOR);
            prefix.push_str(part);
            if enclosing_functions.contains(&prefix) {
                return true;
            }
        }
        false
    }
}

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("{path}: not valid UTF-8 at byte {offset}; file excluded")]
    Decoding { path: String, offset: usize },
}

/// A pluggable source frontend for one target syntax.
pub trait Frontend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether this frontend understands the file at `path`.
    fn handles(&self, path: &Path) -> bool;

    fn tokenize(&self, bytes: &[u8], path: &str) -> Result<Vec<SourceToken>, FrontendError>;

    fn extract_methods(&self, tokens: &[SourceToken], path: &str) -> Vec<MethodRecord>;
}

/// Tokenizes with the reference (Python-syntax) frontend.
pub fn tokenize(bytes: &[u8], path: &str) -> Result<Vec<SourceToken>, FrontendError> {
    PythonFrontend.tokenize(bytes, path)
}

/// Extracts methods with the reference (Python-syntax) frontend.
pub fn extract_methods(tokens: &[SourceToken], path: &str) -> Vec<MethodRecord> {
    PythonFrontend.extract_methods(tokens, path)
}

/// Marker names that identify test and skipped methods.
///
/// Markers match either exactly or on their last dotted segment, so
/// `unittest.skip` matches the entry `skip`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRules {
    pub test_markers: BTreeSet<String>,
    pub skip_markers: BTreeSet<String>,
}

impl Default for TestRules {
    fn default() -> Self {
        TestRules {
            test_markers: ["Test", "pytest.mark.test"].into_iter().map(String::from).collect(),
            skip_markers: ["skip", "skipIf", "skipUnless", "skipif", "Ignore", "Disabled"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

pub(crate) fn marker_matches(marker: &str, set: &BTreeSet<String>) -> bool {
    if set.contains(marker) {
        return true;
    }
    marker
        .rsplit('.')
        .next()
        .map(|last| set.contains(last))
        .unwrap_or(false)
}

/// Decides whether `m` is a test method and records whether it is skipped.
///
/// Depends only on the method's simple name and markers.
pub fn classify_test(m: &mut MethodRecord, rules: &TestRules) -> bool {
    let marked = m.markers.iter().any(|mk| marker_matches(mk, &rules.test_markers));
    let prefixed = m
        .name
        .get(..4)
        .map(|p| p.eq_ignore_ascii_case("test"))
        .unwrap_or(false);
    m.is_test = marked || prefixed;
    m.is_skipped = m.markers.iter().any(|mk| marker_matches(mk, &rules.skip_markers));
    m.is_test
}
