//! Lexical structure of MiniJ.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Byte range in a source text plus the line/column (1-based) of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Span {
            start,
            end,
            line,
            col,
        }
    }

    /// Smallest span covering both `self` and `other`. Line/column come from
    /// whichever starts first.
    pub fn to(self, other: Span) -> Span {
        let (first, _) = if self.start <= other.start {
            (self, other)
        } else {
            (other, self)
        };
        Span {
            start: first.start,
            end: self.end.max(other.end),
            line: first.line,
            col: first.col,
        }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Identifier,
    IntLiteral,
    StringLiteral,
    CharLiteral,
    BoolLiteral,
    Operator,
    Keyword,
    Punctuation,
    MaskMarker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn is_punct(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Punctuation, lexeme)
    }

    pub fn is_op(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Operator, lexeme)
    }

    pub fn is_keyword(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Keyword, lexeme)
    }

    pub fn is_literal(&self) -> bool {
        matches!(
            self.kind,
            TokenKind::IntLiteral
                | TokenKind::StringLiteral
                | TokenKind::CharLiteral
                | TokenKind::BoolLiteral
        ) || self.is_keyword("null")
    }
}

pub const KEYWORDS: &[&str] = &[
    "class", "int", "boolean", "char", "string", "void", "if", "else", "while", "for", "return",
    "new", "null", "this", "assert",
];

/// Operators, longest first so that greedy matching works.
const OPERATORS: &[&str] = &[
    "++", "--", "+=", "-=", "*=", "/=", "<=", ">=", "==", "!=", "&&", "||", "+", "-", "*", "/",
    "%", "<", ">", "=", "!",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.'];

/// The text the mask marker renders as on the wire.
pub const MASK: &str = "<mask>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("{span}: unterminated string literal")]
    UnterminatedString { span: Span },
    #[error("{span}: unterminated character literal")]
    UnterminatedChar { span: Span },
    #[error("{span}: invalid character literal")]
    InvalidChar { span: Span },
    #[error("{span}: illegal character {ch:?}")]
    IllegalCharacter { ch: char, span: Span },
    #[error("{span}: unterminated block comment")]
    UnterminatedComment { span: Span },
}

impl LexError {
    pub fn span(&self) -> Span {
        match self {
            LexError::UnterminatedString { span }
            | LexError::UnterminatedChar { span }
            | LexError::InvalidChar { span }
            | LexError::IllegalCharacter { span, .. }
            | LexError::UnterminatedComment { span } => *span,
        }
    }
}

/// Tokens plus the trivia (whitespace and comments) around them.
///
/// `trivia[i]` precedes `tokens[i]`; the final element trails the last token,
/// so `trivia.len() == tokens.len() + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub trivia: Vec<String>,
}

impl TokenStream {
    /// Reassembles the exact source text the stream was lexed from.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for (trivia, token) in self.trivia.iter().zip(&self.tokens) {
            out.push_str(trivia);
            out.push_str(&token.lexeme);
        }
        if let Some(last) = self.trivia.last() {
            out.push_str(last);
        }
        out
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: usize, line: u32, col: u32) -> Span {
        Span::new(start, self.pos, line, col)
    }
}

/// Splits MiniJ source into tokens.
///
/// All lexical errors are collected; a single bad literal does not hide the
/// ones after it.
pub fn lex(source: &str) -> Result<TokenStream, Vec<LexError>> {
    let mut cur = Cursor {
        src: source,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut trivia = Vec::new();
    let mut errors = Vec::new();
    let mut trivia_start = 0;

    loop {
        // whitespace and comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') if cur.peek_at(1) == Some('/') => {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                }
                Some('/') if cur.peek_at(1) == Some('*') => {
                    let (start, line, col) = (cur.pos, cur.line, cur.col);
                    cur.bump();
                    cur.bump();
                    let mut closed = false;
                    while let Some(c) = cur.bump() {
                        if c == '*' && cur.peek() == Some('/') {
                            cur.bump();
                            closed = true;
                            break;
                        }
                    }
                    if !closed {
                        errors.push(LexError::UnterminatedComment {
                            span: cur.span_from(start, line, col),
                        });
                    }
                }
                _ => break,
            }
        }
        let Some(c) = cur.peek() else { break };
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let gap = source[trivia_start..start].to_string();

        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            let word = &source[start..cur.pos];
            if word == "true" || word == "false" {
                Some(TokenKind::BoolLiteral)
            } else if KEYWORDS.contains(&word) {
                Some(TokenKind::Keyword)
            } else {
                Some(TokenKind::Identifier)
            }
        } else if c.is_ascii_digit() {
            while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                cur.bump();
            }
            Some(TokenKind::IntLiteral)
        } else if c == '"' {
            cur.bump();
            let mut ok = false;
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
                if c == '\\' {
                    if matches!(cur.peek(), Some(c) if c != '\n') {
                        cur.bump();
                    }
                } else if c == '"' {
                    ok = true;
                    break;
                }
            }
            if ok {
                Some(TokenKind::StringLiteral)
            } else {
                errors.push(LexError::UnterminatedString {
                    span: cur.span_from(start, line, col),
                });
                None
            }
        } else if c == '\'' {
            cur.bump();
            let mut body = 0;
            let mut ok = false;
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
                if c == '\\' {
                    if matches!(cur.peek(), Some(c) if c != '\n') {
                        cur.bump();
                    }
                    body += 1;
                } else if c == '\'' {
                    ok = true;
                    break;
                } else {
                    body += 1;
                }
            }
            if !ok {
                errors.push(LexError::UnterminatedChar {
                    span: cur.span_from(start, line, col),
                });
                None
            } else if body != 1 || unescape_char(&source[start..cur.pos]).is_none() {
                errors.push(LexError::InvalidChar {
                    span: cur.span_from(start, line, col),
                });
                None
            } else {
                Some(TokenKind::CharLiteral)
            }
        } else if PUNCTUATION.contains(&c) {
            cur.bump();
            Some(TokenKind::Punctuation)
        } else if source[start..].starts_with(MASK) {
            for _ in 0..MASK.len() {
                cur.bump();
            }
            Some(TokenKind::MaskMarker)
        } else if let Some(op) = OPERATORS
            .iter()
            .find(|op| source[start..].starts_with(**op))
        {
            for _ in 0..op.len() {
                cur.bump();
            }
            Some(TokenKind::Operator)
        } else {
            cur.bump();
            errors.push(LexError::IllegalCharacter {
                ch: c,
                span: cur.span_from(start, line, col),
            });
            None
        };

        if let Some(kind) = kind {
            trivia.push(gap);
            tokens.push(Token {
                kind,
                lexeme: source[start..cur.pos].to_string(),
                span: cur.span_from(start, line, col),
            });
            trivia_start = cur.pos;
        }
    }
    trivia.push(source[trivia_start..].to_string());

    if errors.is_empty() {
        Ok(TokenStream { tokens, trivia })
    } else {
        Err(errors)
    }
}

fn unescape(c: char) -> Option<char> {
    Some(match c {
        'n' => '\n',
        't' => '\t',
        'r' => '\r',
        '0' => '\0',
        '\\' => '\\',
        '\'' => '\'',
        '"' => '"',
        _ => return None,
    })
}

/// Value of a char literal lexeme such as `'a'` or `'\n'`.
pub fn unescape_char(lexeme: &str) -> Option<char> {
    let inner = lexeme.strip_prefix('\'')?.strip_suffix('\'')?;
    let mut chars = inner.chars();
    let c = match chars.next()? {
        '\\' => unescape(chars.next()?)?,
        c => c,
    };
    if chars.next().is_some() || (c as u32) > 0xFFFF {
        return None;
    }
    Some(c)
}

/// Value of a string literal lexeme. Unknown escapes are kept verbatim.
pub fn unescape_string(lexeme: &str) -> String {
    let inner = lexeme
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(lexeme);
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some(e) => match unescape(e) {
                    Some(u) => out.push(u),
                    None => {
                        out.push('\\');
                        out.push(e);
                    }
                },
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_lexemes(src: &str) -> Vec<(TokenKind, String)> {
        lex(src)
            .unwrap()
            .tokens
            .into_iter()
            .map(|t| (t.kind, t.lexeme))
            .collect()
    }

    #[test]
    fn modulo_expression() {
        assert_eq!(
            kinds_and_lexemes("year % 4"),
            vec![
                (TokenKind::Identifier, "year".to_string()),
                (TokenKind::Operator, "%".to_string()),
                (TokenKind::IntLiteral, "4".to_string()),
            ]
        );
    }

    #[test]
    fn empty_input() {
        let ts = lex("").unwrap();
        assert!(ts.tokens.is_empty());
        assert_eq!(ts.trivia, vec![String::new()]);
    }

    #[test]
    fn greedy_operators() {
        let lexemes: Vec<_> = kinds_and_lexemes("a+=b++ - --c<=d&&!e")
            .into_iter()
            .map(|(_, l)| l)
            .collect();
        assert_eq!(
            lexemes,
            ["a", "+=", "b", "++", "-", "--", "c", "<=", "d", "&&", "!", "e"]
        );
    }

    #[test]
    fn spans_track_lines() {
        let ts = lex("a\n  bb").unwrap();
        assert_eq!(ts.tokens[1].span, Span::new(4, 6, 2, 3));
    }

    #[test]
    fn round_trip_with_comments() {
        let src = "class A { // hi\n  /* block */ int x = 'a'; string s = \"q\\\"x\"; }\n";
        assert_eq!(lex(src).unwrap().to_source(), src);
    }

    #[test]
    fn unterminated_string_reported_with_span() {
        let errs = lex("x = \"abc\ny").unwrap_err();
        assert_eq!(
            errs,
            vec![LexError::UnterminatedString {
                span: Span::new(4, 8, 1, 5)
            }]
        );
    }

    #[test]
    fn unterminated_char() {
        let errs = lex("'a").unwrap_err();
        assert!(matches!(errs[0], LexError::UnterminatedChar { .. }));
    }

    #[test]
    fn illegal_characters_all_reported() {
        let errs = lex("a # b @").unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(matches!(
            errs[0],
            LexError::IllegalCharacter { ch: '#', .. }
        ));
        assert!(matches!(
            errs[1],
            LexError::IllegalCharacter { ch: '@', .. }
        ));
    }

    #[test]
    fn mask_marker() {
        let toks = kinds_and_lexemes("year <mask> 4");
        assert_eq!(toks[1], (TokenKind::MaskMarker, MASK.to_string()));
    }

    #[test]
    fn escapes() {
        assert_eq!(unescape_char("'\\n'"), Some('\n'));
        assert_eq!(unescape_string("\"a\\tb\""), "a\tb");
        assert!(lex("'ab'").is_err());
    }
}
