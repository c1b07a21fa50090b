//! Reference frontend for indentation-delimited `def` syntax.

use std::collections::BTreeSet;
use std::path::Path;

use super::{Frontend, FrontendError, MethodRecord, SourceToken, Span, TokenKind, ID_SEPARATOR};

const KEYWORDS: &[&str] = &[
    "None", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is",
    "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

const STRING_PREFIXES: &[&str] = &["r", "u", "b", "f", "br", "rb", "fr", "rf"];

// Longest first.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "@=", ":=", "&&", "||", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "=", "!",
];

const PUNCTUATION: &[&str] = &["...", "->", "(", ")", "[", "]", "{", "}", ",", ":", ";", "."];

#[derive(Debug, Clone, Copy, Default)]
pub struct PythonFrontend;

impl Frontend for PythonFrontend {
    fn name(&self) -> &'static str {
        "python"
    }

    fn handles(&self, path: &Path) -> bool {
        path.extension().map(|e| e == "py").unwrap_or(false)
    }

    fn tokenize(&self, bytes: &[u8], path: &str) -> Result<Vec<SourceToken>, FrontendError> {
        let src = std::str::from_utf8(bytes).map_err(|e| FrontendError::Decoding {
            path: path.to_string(),
            offset: e.valid_up_to(),
        })?;
        Ok(Lexer::new(src).run())
    }

    fn extract_methods(&self, tokens: &[SourceToken], path: &str) -> Vec<MethodRecord> {
        extract(tokens, path)
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    out: Vec<SourceToken>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0, line: 1, out: Vec::new() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn run(mut self) -> Vec<SourceToken> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            let kind = if is_space(c) || self.at_line_continuation() {
                self.whitespace();
                TokenKind::Whitespace
            } else if c == '#' {
                self.until_newline();
                TokenKind::Comment
            } else if c == '"' || c == '\'' {
                self.string_body();
                TokenKind::StringLiteral
            } else if c.is_ascii_digit()
                || (c == '.' && self.rest()[1..].starts_with(|d: char| d.is_ascii_digit()))
            {
                self.number();
                TokenKind::NumberLiteral
            } else if c == '_' || c.is_alphabetic() {
                self.word()
            } else if let Some(op) = OPERATORS.iter().find(|op| self.rest().starts_with(*op)) {
                // `...` and `->` start with operator characters.
                match PUNCTUATION.iter().find(|p| self.rest().starts_with(*p)) {
                    Some(p) if p.len() > op.len() => {
                        self.pos += p.len();
                        TokenKind::Punctuation
                    }
                    _ => {
                        self.pos += op.len();
                        TokenKind::Operator
                    }
                }
            } else if let Some(p) = PUNCTUATION.iter().find(|p| self.rest().starts_with(*p)) {
                self.pos += p.len();
                TokenKind::Punctuation
            } else {
                // Anything unrecognised becomes a one-character token so the
                // stream stays lossless.
                self.pos += c.len_utf8();
                TokenKind::Punctuation
            };
            self.push(kind, start);
        }
        self.out
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        let text = &self.src[start..self.pos];
        let line = self.line;
        self.line += text.matches('\n').count() as u32;
        self.out.push(SourceToken {
            kind,
            text: text.to_string(),
            span: Span::new(start, self.pos),
            line,
        });
    }

    fn at_line_continuation(&self) -> bool {
        let r = self.rest();
        r.starts_with("\\\n") || r.starts_with("\\\r\n")
    }

    fn whitespace(&mut self) {
        loop {
            if self.at_line_continuation() {
                self.pos += if self.rest().starts_with("\\\n") { 2 } else { 3 };
            } else if matches!(self.peek(), Some(c) if is_space(c)) {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn until_newline(&mut self) {
        let len = self.rest().find(['\n', '\r']).unwrap_or(self.rest().len());
        self.pos += len;
    }

    /// Consumes a quoted string starting at the opening quote.
    fn string_body(&mut self) {
        let rest = self.rest();
        let quote = &rest[..1];
        let triple = rest.starts_with(&quote.repeat(3));
        let delim = if triple { quote.repeat(3) } else { quote.to_string() };
        self.pos += delim.len();
        loop {
            let r = self.rest();
            let Some(c) = r.chars().next() else { return };
            if c == '\\' {
                self.pos += 1;
                if let Some(next) = self.peek() {
                    self.pos += next.len_utf8();
                }
            } else if r.starts_with(delim.as_str()) {
                self.pos += delim.len();
                return;
            } else if !triple && (c == '\n' || c == '\r') {
                // Unterminated single-line string ends at the newline.
                return;
            } else {
                self.pos += c.len_utf8();
            }
        }
    }

    fn number(&mut self) {
        let bytes = self.src.as_bytes();
        let lower = self.rest().get(..2).map(|s| s.to_ascii_lowercase());
        if matches!(lower.as_deref(), Some("0x" | "0o" | "0b")) {
            self.pos += 2;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            return;
        }
        let digits = |lx: &mut Self| {
            while lx.pos < bytes.len() && (bytes[lx.pos].is_ascii_digit() || bytes[lx.pos] == b'_') {
                lx.pos += 1;
            }
        };
        digits(self);
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            digits(self);
        }
        if self.pos < bytes.len() && (bytes[self.pos] | 0x20) == b'e' {
            let mut p = self.pos + 1;
            if p < bytes.len() && (bytes[p] == b'+' || bytes[p] == b'-') {
                p += 1;
            }
            if p < bytes.len() && bytes[p].is_ascii_digit() {
                self.pos = p;
                digits(self);
            }
        }
        if self.pos < bytes.len() && matches!(bytes[self.pos], b'j' | b'J' | b'l' | b'L') {
            self.pos += 1;
        }
    }

    /// Identifier, keyword, boolean, or a prefixed string literal.
    fn word(&mut self) -> TokenKind {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == '_' || c.is_alphanumeric() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let word = &self.src[start..self.pos];
        if matches!(self.peek(), Some('"' | '\''))
            && STRING_PREFIXES.contains(&word.to_ascii_lowercase().as_str())
        {
            self.string_body();
            return TokenKind::StringLiteral;
        }
        match word {
            "True" | "False" => TokenKind::BooleanLiteral,
            w if KEYWORDS.contains(&w) => TokenKind::Keyword,
            _ => TokenKind::Identifier,
        }
    }
}

fn is_space(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0c')
}

/// One logical source line: significant tokens joined across bracketed
/// newlines and backslash continuations.
#[derive(Debug)]
struct LogicalLine {
    indent: usize,
    /// Indices into the full token slice; all significant.
    tokens: Vec<usize>,
}

fn indent_width(ws: &str) -> usize {
    ws.chars().fold(0, |col, c| if c == '\t' { (col / 8 + 1) * 8 } else { col + 1 })
}

fn logical_lines(tokens: &[SourceToken]) -> Vec<LogicalLine> {
    let mut lines = Vec::new();
    let mut current: Option<LogicalLine> = None;
    let mut depth: i32 = 0;
    // Text between the most recent newline and the next significant token.
    let mut leading = String::new();
    let mut at_line_start = true;

    for (i, tok) in tokens.iter().enumerate() {
        match tok.kind {
            TokenKind::Whitespace => {
                let ends_line = ends_logical_line(&tok.text);
                if ends_line && depth <= 0 {
                    if let Some(line) = current.take() {
                        lines.push(line);
                    }
                    depth = 0;
                    at_line_start = true;
                }
                if at_line_start {
                    match tok.text.rfind('\n') {
                        Some(nl) => leading = tok.text[nl + 1..].to_string(),
                        None => leading.push_str(&tok.text),
                    }
                }
            }
            TokenKind::Comment => {}
            _ => {
                if current.is_none() {
                    let indent = if at_line_start { indent_width(&leading) } else { 0 };
                    current = Some(LogicalLine { indent, tokens: Vec::new() });
                }
                at_line_start = false;
                leading.clear();
                if tok.kind == TokenKind::Punctuation {
                    match tok.text.as_str() {
                        "(" | "[" | "{" => depth += 1,
                        ")" | "]" | "}" => depth -= 1,
                        _ => {}
                    }
                }
                if let Some(line) = current.as_mut() {
                    line.tokens.push(i);
                }
            }
        }
    }
    if let Some(line) = current {
        lines.push(line);
    }
    lines
}

/// A whitespace run ends the logical line if it contains a newline that is
/// not part of a backslash continuation.
fn ends_logical_line(ws: &str) -> bool {
    let b = ws.as_bytes();
    for (i, &c) in b.iter().enumerate() {
        if c == b'\n' {
            let continued = (i >= 1 && b[i - 1] == b'\\') || (i >= 2 && b[i - 1] == b'\r' && b[i - 2] == b'\\');
            if !continued {
                return true;
            }
        }
    }
    false
}

#[derive(Debug)]
enum ScopeKind {
    Class,
    Function { record: usize },
}

#[derive(Debug)]
struct Scope {
    indent: usize,
    name: String,
    kind: ScopeKind,
}

struct PendingRecord {
    name: String,
    container: Vec<String>,
    markers: BTreeSet<String>,
    start_token: usize,
    /// First token after the header colon.
    body_start: usize,
    last_token: usize,
}

fn extract(tokens: &[SourceToken], path: &str) -> Vec<MethodRecord> {
    let lines = logical_lines(tokens);
    let mut scopes: Vec<Scope> = Vec::new();
    let mut pending: Vec<PendingRecord> = Vec::new();
    let mut decorators: Vec<(usize, String)> = Vec::new();

    for line in &lines {
        while scopes.last().map(|s| line.indent <= s.indent).unwrap_or(false) {
            scopes.pop();
        }
        // Every open function scope contains this line.
        let last_tok = *line.tokens.last().expect("logical lines are non-empty");
        for scope in &scopes {
            if let ScopeKind::Function { record } = scope.kind {
                pending[record].last_token = last_tok;
            }
        }

        let first = &tokens[line.tokens[0]];
        if first.text == "@" {
            decorators.push((line.tokens[0], decorator_name(tokens, &line.tokens[1..])));
            continue;
        }

        let mut k = 0;
        if tokens[line.tokens[k]].text == "async" && line.tokens.len() > 1 {
            k += 1;
        }
        let head = tokens[line.tokens[k]].text.as_str();
        let decorated_start = decorators.first().map(|d| d.0);
        let markers: BTreeSet<String> = decorators.drain(..).map(|d| d.1).collect();
        if head != "def" && head != "class" {
            continue;
        }
        let Some(name_tok) = line.tokens.get(k + 1).map(|&i| &tokens[i]) else {
            log::debug!("{path}:{}: `{head}` without a name, skipped", first.line);
            continue;
        };
        if name_tok.kind != TokenKind::Identifier {
            log::debug!("{path}:{}: unparseable `{head}` header, skipped", first.line);
            continue;
        }
        let name = name_tok.text.clone();
        let Some(colon_pos) = header_colon(tokens, &line.tokens[k + 2..]).map(|p| p + k + 2) else {
            log::debug!("{path}:{}: `{head} {name}` has no header colon, skipped", first.line);
            continue;
        };
        let inline_body = colon_pos + 1 < line.tokens.len();
        let container: Vec<String> = scopes.iter().map(|s| s.name.clone()).collect();

        if head == "class" {
            if !inline_body {
                scopes.push(Scope { indent: line.indent, name, kind: ScopeKind::Class });
            }
            continue;
        }

        let colon_tok = line.tokens[colon_pos];
        let record = pending.len();
        pending.push(PendingRecord {
            name: name.clone(),
            container,
            markers,
            start_token: decorated_start.unwrap_or(line.tokens[0]),
            body_start: colon_tok + 1,
            last_token: last_tok,
        });
        if !inline_body {
            scopes.push(Scope { indent: line.indent, name, kind: ScopeKind::Function { record } });
        }
    }

    let mut records: Vec<MethodRecord> = pending
        .into_iter()
        .map(|p| {
            let start = &tokens[p.start_token];
            let end = &tokens[p.last_token];
            let id = std::iter::once(path)
                .chain(p.container.iter().map(String::as_str))
                .chain(std::iter::once(p.name.as_str()))
                .collect::<Vec<_>>()
                .join(ID_SEPARATOR);
            MethodRecord {
                id,
                name: p.name,
                container: p.container,
                file: path.to_string(),
                span: Span::new(start.span.start, end.span.end),
                line_range: (start.line, end.last_line()),
                body_tokens: tokens[p.body_start.min(p.last_token + 1)..=p.last_token].to_vec(),
                markers: p.markers,
                is_test: false,
                is_skipped: false,
            }
        })
        .collect();
    records.sort_by_key(|r| (r.span.start, r.span.end));
    records
}

/// Dotted name following `@`, arguments dropped.
fn decorator_name(tokens: &[SourceToken], rest: &[usize]) -> String {
    let mut name = String::new();
    for &i in rest {
        let t = &tokens[i];
        match t.kind {
            TokenKind::Identifier | TokenKind::Keyword | TokenKind::BooleanLiteral => name.push_str(&t.text),
            TokenKind::Punctuation if t.text == "." => name.push('.'),
            _ => break,
        }
    }
    name
}

/// Position (within `rest`) of the `:` that closes a def/class header.
fn header_colon(tokens: &[SourceToken], rest: &[usize]) -> Option<usize> {
    let mut depth = 0i32;
    for (pos, &i) in rest.iter().enumerate() {
        let t = &tokens[i];
        if t.kind != TokenKind::Punctuation {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            ":" if depth == 0 => return Some(pos),
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(src: &str) -> Vec<SourceToken> {
        PythonFrontend.tokenize(src.as_bytes(), "t.py").unwrap()
    }

    fn significant(src: &str) -> Vec<(TokenKind, String)> {
        lex(src)
            .into_iter()
            .filter(|t| t.kind != TokenKind::Whitespace)
            .map(|t| (t.kind, t.text))
            .collect()
    }

    fn methods(src: &str) -> Vec<MethodRecord> {
        extract(&lex(src), "pkg/t.py")
    }

    #[test]
    fn simple_assignment() {
        use TokenKind::*;
        let toks = lex("a = 1 + 2");
        let kinds: Vec<_> = toks.iter().map(|t| (t.kind, t.text.as_str())).collect();
        assert_eq!(
            kinds,
            vec![
                (Identifier, "a"),
                (Whitespace, " "),
                (Operator, "="),
                (Whitespace, " "),
                (NumberLiteral, "1"),
                (Whitespace, " "),
                (Operator, "+"),
                (Whitespace, " "),
                (NumberLiteral, "2"),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(lex("").is_empty());
    }

    #[test]
    fn non_utf8_is_rejected() {
        let err = PythonFrontend.tokenize(&[b'a', 0xff, b'b'], "bad.py").unwrap_err();
        assert!(matches!(err, FrontendError::Decoding { offset: 1, .. }));
    }

    #[test]
    fn strings_and_comments_are_single_tokens() {
        use TokenKind::*;
        let toks = significant("x = 'a + b'  # 1 + 2\ny = rb\"\\\"q\" + f'''t\n+'''");
        assert_eq!(toks[2], (StringLiteral, "'a + b'".into()));
        assert_eq!(toks[3], (Comment, "# 1 + 2".into()));
        assert_eq!(toks[6], (StringLiteral, "rb\"\\\"q\"".into()));
        assert_eq!(toks[8], (StringLiteral, "f'''t\n+'''".into()));
    }

    #[test]
    fn keywords_booleans_and_operators() {
        use TokenKind::*;
        let toks = significant("if not a and b >= 1.5e-3 or True: x //= 0x1F")
            .into_iter()
            .map(|(k, _)| k)
            .collect::<Vec<_>>();
        assert_eq!(
            toks,
            vec![
                Keyword, Keyword, Identifier, Keyword, Identifier, Operator, NumberLiteral, Keyword,
                BooleanLiteral, Punctuation, Identifier, Operator, NumberLiteral
            ]
        );
    }

    #[test]
    fn arrow_and_ellipsis_are_punctuation() {
        let toks = significant("def f() -> int: ...");
        assert!(toks.contains(&(TokenKind::Punctuation, "->".into())));
        assert!(toks.contains(&(TokenKind::Punctuation, "...".into())));
    }

    #[test]
    fn line_numbers_track_newlines() {
        let toks = lex("a\n'''x\ny'''\nb");
        let b = toks.iter().find(|t| t.text == "b").unwrap();
        assert_eq!(b.line, 4);
    }

    #[test]
    fn unterminated_string_stays_lossless() {
        let src = "x = 'abc\ny = 2\n";
        let joined: String = lex(src).iter().map(|t| t.text.as_str()).collect();
        assert_eq!(joined, src);
    }

    #[test]
    fn two_top_level_definitions() {
        let ms = methods("def testSum1():\n    assert sum(1, 2) == 3\n\ndef sum(a, b):\n    return a + b\n");
        let ids: Vec<_> = ms.iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids, vec!["pkg/t.py::testSum1", "pkg/t.py::sum"]);
        assert_eq!(ms[0].line_range, (1, 2));
        assert_eq!(ms[1].line_range, (4, 5));
    }

    #[test]
    fn class_methods_are_qualified() {
        let src = "\
class TestTriangle(unittest.TestCase):
    def setUp(self):
        self.x = 1

    @unittest.skip(\"later\")
    def testA(self):
        pass

    async def testB(self): return 1
";
        let ms = methods(src);
        let ids: Vec<_> = ms.iter().map(|m| m.id.as_str()).collect();
        assert_eq!(
            ids,
            vec![
                "pkg/t.py::TestTriangle::setUp",
                "pkg/t.py::TestTriangle::testA",
                "pkg/t.py::TestTriangle::testB",
            ]
        );
        assert!(ms[1].markers.contains("unittest.skip"));
        assert_eq!(ms[1].line_range, (5, 7));
        assert_eq!(ms[2].line_range, (9, 9));
    }

    #[test]
    fn nested_functions_are_qualified_by_enclosing_function() {
        let src = "def outer():\n    def inner():\n        return 1\n    return inner()\n";
        let ms = methods(src);
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[0].id, "pkg/t.py::outer");
        assert_eq!(ms[0].line_range, (1, 4));
        assert_eq!(ms[1].id, "pkg/t.py::outer::inner");
        assert_eq!(ms[1].line_range, (2, 3));
    }

    #[test]
    fn multiline_headers_and_bracketed_bodies() {
        let src = "def f(a,\n      b: dict = {'k': 1},\n      ) -> int:\n    x = [\n1,\n2]\n    return x\n\ny = 3\n";
        let ms = methods(src);
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].line_range, (1, 7));
    }

    #[test]
    fn comments_between_do_not_end_bodies() {
        let src = "def f():\n    a = 1\n# flush-left comment\n    return a\n";
        let ms = methods(src);
        assert_eq!(ms[0].line_range, (1, 4));
    }

    #[test]
    fn body_tokens_start_after_the_colon() {
        let ms = methods("def t(): assertEquals(4, sum(2,2))\n");
        let text: String = ms[0].body_tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(text.trim(), "assertEquals(4, sum(2,2))");
    }

    #[test]
    fn headerless_def_is_skipped() {
        assert!(methods("def\n").is_empty());
        assert!(methods("def 3():\n  pass\n").is_empty());
    }

    #[test]
    fn empty_file_has_no_methods() {
        assert!(methods("").is_empty());
    }
}
