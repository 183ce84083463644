//! Mask-site enumeration and masked-sequence rendering.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::ast::{walk_block, AssignOp, Expr, ExprKind, MethodRef};
use crate::lang::token::MASK;
use crate::lang::{CheckedProgram, Span, Token, TokenKind};

/// Longest sequence handed to a predictor, in lexical tokens.
pub const MAX_SEQUENCE_TOKENS: usize = 512;

/// Mutation operator family. The declaration order is the tie-break order
/// for sites starting at the same byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorFamily {
    BinaryOp,
    UnaryOp,
    Literal,
    VariableName,
    CompoundAssignOp,
    MethodName,
    FieldName,
    ArrayIndex,
    TypeReference,
}

impl OperatorFamily {
    pub const ALL: [OperatorFamily; 9] = [
        OperatorFamily::BinaryOp,
        OperatorFamily::UnaryOp,
        OperatorFamily::Literal,
        OperatorFamily::VariableName,
        OperatorFamily::CompoundAssignOp,
        OperatorFamily::MethodName,
        OperatorFamily::FieldName,
        OperatorFamily::ArrayIndex,
        OperatorFamily::TypeReference,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            OperatorFamily::BinaryOp => "binary-op",
            OperatorFamily::UnaryOp => "unary-op",
            OperatorFamily::Literal => "literal",
            OperatorFamily::VariableName => "variable-name",
            OperatorFamily::CompoundAssignOp => "compound-assign-op",
            OperatorFamily::MethodName => "method-name",
            OperatorFamily::FieldName => "field-name",
            OperatorFamily::ArrayIndex => "array-index",
            OperatorFamily::TypeReference => "type-reference",
        }
    }

    pub fn from_tag(tag: &str) -> Option<OperatorFamily> {
        Self::ALL.into_iter().find(|f| f.tag() == tag)
    }
}

impl fmt::Display for OperatorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One masked position inside a method body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSite {
    pub family: OperatorFamily,
    pub method: MethodRef,
    /// Bytes covered by the masked token(s). For compound assignments only
    /// the operator part, e.g. `+` of `+=`.
    pub span: Span,
    /// Half-open range of masked tokens in `Program::tokens`.
    pub tokens: (usize, usize),
    /// Text that the mask replaces.
    pub original: String,
}

impl MaskSite {
    /// Source text spliced in place of the target for a replacement.
    pub fn splice_text(&self, replacement: &str) -> String {
        if self.family == OperatorFamily::CompoundAssignOp {
            format!("{replacement}=")
        } else {
            replacement.to_string()
        }
    }

    /// The target span widened to whole tokens (includes the `=` of a
    /// compound operator).
    pub fn replaced_span(&self, program: &CheckedProgram) -> Span {
        let toks = &program.tokens;
        toks[self.tokens.0].span.to(toks[self.tokens.1 - 1].span)
    }
}

/// A method's tokens with one site replaced by a mask marker, cut to the
/// predictor window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSequence {
    pub site: MaskSite,
    pub tokens: Vec<Token>,
    /// Half-open window into the masked method stream.
    pub window: (usize, usize),
}

impl MaskedSequence {
    pub fn text(&self) -> String {
        render_tokens(&self.tokens)
    }

    pub fn mask_count(&self) -> usize {
        self.tokens
            .iter()
            .filter(|t| t.kind == TokenKind::MaskMarker)
            .count()
    }
}

fn no_space_before(t: &Token) -> bool {
    t.kind == TokenKind::Punctuation && matches!(t.lexeme.as_str(), ";" | "," | ")" | "]")
}

fn no_space_after(t: &Token) -> bool {
    t.kind == TokenKind::Punctuation && matches!(t.lexeme.as_str(), "(" | "[")
}

/// Joins tokens with single spaces, except none before `; , ) ]` and none
/// after `( [`.
pub fn render_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 && !no_space_before(t) && !no_space_after(&tokens[i - 1]) {
            out.push(' ');
        }
        out.push_str(&t.lexeme);
    }
    out
}

fn token_index(tokens: &[Token], start: usize) -> usize {
    tokens
        .binary_search_by_key(&start, |t| t.span.start)
        .expect("span starts on a token")
}

fn token_range(tokens: &[Token], span: Span) -> (usize, usize) {
    let first = token_index(tokens, span.start);
    let mut last = first;
    while tokens[last].span.end < span.end {
        last += 1;
    }
    (first, last + 1)
}

struct Collector<'p> {
    program: &'p CheckedProgram,
    method: MethodRef,
    sites: Vec<MaskSite>,
}

impl<'p> Collector<'p> {
    fn add(&mut self, family: OperatorFamily, span: Span) {
        let tokens = token_range(&self.program.tokens, span);
        let original = self.program.source()[span.start..span.end].to_string();
        self.sites.push(MaskSite {
            family,
            method: self.method,
            span,
            tokens,
            original,
        });
    }

    fn expr(&mut self, e: &Expr) {
        use OperatorFamily as F;
        match &e.kind {
            ExprKind::Literal { .. } => self.add(F::Literal, e.span),
            ExprKind::Var { name, .. } => self.add(F::VariableName, name.span),
            ExprKind::FieldAccess { field, .. } => self.add(F::FieldName, field.span),
            ExprKind::ArrayRead { index, .. } => self.add(F::ArrayIndex, index.span),
            ExprKind::Assign { op, op_span, .. } if *op != AssignOp::Assign => {
                // only the arithmetic part of `+=` is masked
                let op_only = Span {
                    end: op_span.end - 1,
                    ..*op_span
                };
                let tokens = token_range(&self.program.tokens, *op_span);
                self.sites.push(MaskSite {
                    family: F::CompoundAssignOp,
                    method: self.method,
                    span: op_only,
                    tokens,
                    original: self.program.source()[op_only.start..op_only.end].to_string(),
                });
            }
            ExprKind::Binary { op_span, .. } => self.add(F::BinaryOp, *op_span),
            ExprKind::Prefix { op_span, .. } | ExprKind::Postfix { op_span, .. } => {
                self.add(F::UnaryOp, *op_span)
            }
            ExprKind::Call { method, .. } => self.add(F::MethodName, method.span),
            ExprKind::StaticCall { class, method, .. } => {
                self.add(F::TypeReference, class.span);
                self.add(F::MethodName, method.span);
            }
            _ => {}
        }
    }
}

/// Every mask site of the program, ordered by span start and then family.
pub fn enumerate_sites(program: &CheckedProgram) -> Vec<MaskSite> {
    let mut c = Collector {
        program,
        method: MethodRef {
            class: 0,
            method: 0,
        },
        sites: Vec::new(),
    };
    for (ci, class) in program.classes.iter().enumerate() {
        for (mi, m) in class.methods().enumerate() {
            c.method = MethodRef {
                class: ci as u32,
                method: mi as u32,
            };
            let mut exprs = Vec::new();
            walk_block(&m.body, &mut |e| exprs.push(e));
            for e in exprs {
                c.expr(e);
            }
        }
    }
    let mut sites = c.sites;
    sites.sort_by_key(|s| (s.span.start, s.family));
    sites
}

/// Chooses the window of at most `max` tokens around `mask` in a stream of
/// `len` tokens: the whole stream if it fits, otherwise grown one token at a
/// time, alternating left and right, each side stopping at the boundary.
pub fn window_around(len: usize, mask: usize, max: usize) -> (usize, usize) {
    if len <= max {
        return (0, len);
    }
    let (mut lo, mut hi) = (mask, mask + 1);
    let mut left = true;
    while hi - lo < max {
        let can_left = lo > 0;
        let can_right = hi < len;
        if (left && can_left) || !can_right {
            lo -= 1;
        } else {
            hi += 1;
        }
        left = !left;
    }
    (lo, hi)
}

/// Renders the masked sequence for a site of `program`.
pub fn render_masked(program: &CheckedProgram, site: &MaskSite) -> MaskedSequence {
    render_masked_with_limit(program, site, MAX_SEQUENCE_TOKENS)
}

pub fn render_masked_with_limit(
    program: &CheckedProgram,
    site: &MaskSite,
    max: usize,
) -> MaskedSequence {
    let method = program.method_by_ref(site.method);
    let (m0, m1) = method.token_range;
    let toks = &program.tokens;
    let lexeme = if site.family == OperatorFamily::CompoundAssignOp {
        format!("{MASK}=")
    } else {
        MASK.to_string()
    };
    let mask = Token {
        kind: TokenKind::MaskMarker,
        lexeme,
        span: site.span,
    };
    let mut stream: Vec<Token> = Vec::with_capacity(m1 - m0);
    stream.extend_from_slice(&toks[m0..site.tokens.0]);
    let mask_pos = stream.len();
    stream.push(mask);
    stream.extend_from_slice(&toks[site.tokens.1..m1]);
    let window = window_around(stream.len(), mask_pos, max);
    MaskedSequence {
        site: site.clone(),
        tokens: stream[window.0..window.1].to_vec(),
        window,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::compile_source;

    fn sites_of(src: &str) -> (CheckedProgram, Vec<MaskSite>) {
        let p = compile_source(src).unwrap();
        let s = enumerate_sites(&p);
        (p, s)
    }

    #[test]
    fn single_literal_program_has_one_site() {
        let (_, sites) = sites_of("class A { int f(){ return 1; } }");
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].family, OperatorFamily::Literal);
        assert_eq!(sites[0].original, "1");
    }

    #[test]
    fn binary_expression_has_three_sites() {
        let (_, sites) = sites_of("class A { int f(int a, int b){ return a + b; } }");
        let fams: Vec<_> = sites
            .iter()
            .map(|s| (s.family, s.original.as_str()))
            .collect();
        assert_eq!(
            fams,
            vec![
                (OperatorFamily::VariableName, "a"),
                (OperatorFamily::BinaryOp, "+"),
                (OperatorFamily::VariableName, "b"),
            ]
        );
    }

    #[test]
    fn leap_year_sites() {
        let (p, sites) = sites_of(
            "class LeapYear { boolean isLeapYear(int year) { \
             return (year % 4 == 0) && (year % 100 != 0) || (year % 400 == 0); } }",
        );
        let of = |f: OperatorFamily| -> Vec<&str> {
            sites
                .iter()
                .filter(|s| s.family == f)
                .map(|s| s.original.as_str())
                .collect()
        };
        assert_eq!(
            of(OperatorFamily::BinaryOp),
            ["%", "==", "&&", "%", "!=", "||", "%", "=="]
        );
        assert_eq!(
            of(OperatorFamily::Literal),
            ["4", "0", "100", "0", "400", "0"]
        );
        assert_eq!(of(OperatorFamily::VariableName), ["year", "year", "year"]);
        let first = sites.iter().find(|s| s.original == "%").unwrap();
        assert!(render_masked(&p, first).text().contains("year <mask> 4"));
    }

    #[test]
    fn array_index_covers_whole_expression() {
        let (p, sites) = sites_of("class S { int g(int[] arr, int mid) { return arr[mid - 1]; } }");
        let idx = sites
            .iter()
            .find(|s| s.family == OperatorFamily::ArrayIndex)
            .unwrap();
        assert_eq!(idx.original, "mid - 1");
        assert_eq!(idx.tokens.1 - idx.tokens.0, 3);
        let seq = render_masked(&p, idx);
        assert!(seq.text().contains("arr [<mask>]"), "{}", seq.text());
        let names: Vec<_> = sites.iter().map(|s| s.original.as_str()).collect();
        assert_eq!(names, ["arr", "mid", "mid - 1", "-", "1"]);
    }

    #[test]
    fn compound_assignment_masks_operator_only() {
        let (p, sites) = sites_of("class A { void f(int avg, int r) { avg += r; } }");
        let s = sites
            .iter()
            .find(|s| s.family == OperatorFamily::CompoundAssignOp)
            .unwrap();
        assert_eq!(s.original, "+");
        assert!(render_masked(&p, s).text().contains("avg <mask>= r;"));
    }

    #[test]
    fn static_call_receiver_is_type_reference() {
        let (p, sites) = sites_of("class A { int f() { return (int) (Math.random() * 10); } }");
        let s = sites
            .iter()
            .find(|s| s.family == OperatorFamily::TypeReference)
            .unwrap();
        assert_eq!(s.original, "Math");
        assert!(render_masked(&p, s)
            .text()
            .contains("(int) (<mask> . random () * 10)"));
    }

    #[test]
    fn declarations_and_this_are_not_sites() {
        let (_, sites) = sites_of("class A { int x = 3; void f(int p) { int y; this.x = p; } }");
        let names: Vec<_> = sites.iter().map(|s| s.original.as_str()).collect();
        assert_eq!(names, ["x", "p"]);
    }

    #[test]
    fn render_spacing() {
        let ts = crate::lang::lex("f ( a , b [ 1 ] ) ;").unwrap();
        assert_eq!(render_tokens(&ts.tokens), "f (a, b [1]);");
    }

    #[test]
    fn window_rule() {
        assert_eq!(window_around(511, 10, 512), (0, 511));
        assert_eq!(window_around(600, 300, 512), (44, 556));
        assert_eq!(window_around(600, 0, 512), (0, 512));
        assert_eq!(window_around(600, 599, 512), (88, 600));
        assert_eq!(window_around(10, 4, 4), (2, 6));
    }
}
