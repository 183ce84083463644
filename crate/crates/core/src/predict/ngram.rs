//! Family-aware n-gram baseline trained on a MiniJ corpus.
//!
//! Corpus tokens are classified lexically into operator families. Order 1
//! keeps one frequency table per family, order 2 conditions on the token
//! left of the target, order 3 on both neighbours. Lookups back off from
//! the highest order to tokens of the same family in the visible masked
//! sequence, then to the family-wide table, and finally pad with the
//! original token. For identifier families the visible tokens come first.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ranked, PredictError, Prediction, Predictor, TOP_K};
use crate::lang::{lex, Token, TokenKind};
use crate::masking::{render_tokens, MaskedSequence, OperatorFamily};

const START: &str = "<s>";
const END: &str = "</s>";

#[derive(Debug, Error)]
pub enum NgramError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: lexical error at {span}")]
    Lex {
        path: String,
        span: crate::lang::Span,
    },
    #[error("invalid model file: {0}")]
    Format(String),
}

type Table = BTreeMap<String, u64>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramModel {
    order: u8,
    unigram: BTreeMap<OperatorFamily, Table>,
    /// Keyed by the left neighbour.
    bigram: BTreeMap<OperatorFamily, BTreeMap<String, Table>>,
    /// Keyed by `left + "\u{1}" + right`.
    trigram: BTreeMap<OperatorFamily, BTreeMap<String, Table>>,
}

fn tri_key(left: &str, right: &str) -> String {
    format!("{left}\u{1}{right}")
}

fn is_type_keyword(t: &Token) -> bool {
    t.kind == TokenKind::Keyword
        && matches!(
            t.lexeme.as_str(),
            "int" | "boolean" | "char" | "string" | "void"
        )
}

fn ends_operand(t: &Token) -> bool {
    t.is_literal()
        || matches!(t.kind, TokenKind::Identifier)
        || t.is_keyword("this")
        || t.is_punct(")")
        || t.is_punct("]")
}

/// One training occurrence: family, target text and the neighbour tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Occurrence {
    pub family: OperatorFamily,
    pub text: String,
    pub left: String,
    pub right: String,
}

/// Lexical approximation of mask-site enumeration, usable on fragments
/// that do not parse.
pub(crate) fn classify(tokens: &[Token]) -> Vec<Occurrence> {
    use OperatorFamily as F;
    let lexeme = |i: isize| -> &str {
        if i < 0 {
            START
        } else {
            tokens.get(i as usize).map_or(END, |t| t.lexeme.as_str())
        }
    };
    let tok = |i: isize| -> Option<&Token> {
        if i < 0 {
            None
        } else {
            tokens.get(i as usize)
        }
    };
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        let ii = i as isize;
        let prev = tok(ii - 1);
        let next = tok(ii + 1);
        let family = match t.kind {
            TokenKind::Operator => match t.lexeme.as_str() {
                "+=" | "-=" | "*=" | "/=" => {
                    out.push(Occurrence {
                        family: F::CompoundAssignOp,
                        text: t.lexeme[..1].to_string(),
                        left: lexeme(ii - 1).to_string(),
                        right: lexeme(ii + 1).to_string(),
                    });
                    None
                }
                "=" => None,
                "!" | "++" | "--" => Some(F::UnaryOp),
                "-" if !prev.is_some_and(ends_operand) => Some(F::UnaryOp),
                _ => Some(F::BinaryOp),
            },
            TokenKind::IntLiteral
            | TokenKind::StringLiteral
            | TokenKind::CharLiteral
            | TokenKind::BoolLiteral => Some(F::Literal),
            TokenKind::Keyword if t.lexeme == "null" => Some(F::Literal),
            TokenKind::Identifier => {
                let after_dot = prev.is_some_and(|p| p.is_punct("."));
                let before_paren = next.is_some_and(|n| n.is_punct("("));
                let before_dot = next.is_some_and(|n| n.is_punct("."));
                let declared = prev.is_some_and(|p| {
                    p.kind == TokenKind::Identifier
                        || is_type_keyword(p)
                        || p.is_keyword("class")
                        || p.is_keyword("new")
                        || p.is_keyword("test")
                        || (p.is_punct("]") && tok(ii - 2).is_some_and(|q| q.is_punct("[")))
                });
                let type_name = next.is_some_and(|n| n.kind == TokenKind::Identifier)
                    || (next.is_some_and(|n| n.is_punct("["))
                        && tok(ii + 2).is_some_and(|n| n.is_punct("]")));
                if after_dot {
                    Some(if before_paren {
                        F::MethodName
                    } else {
                        F::FieldName
                    })
                } else if before_dot && t.lexeme.starts_with(char::is_uppercase) {
                    Some(F::TypeReference)
                } else if before_paren {
                    // method declarations look like calls; skip them
                    if declared {
                        None
                    } else {
                        Some(F::MethodName)
                    }
                } else if declared || type_name {
                    None
                } else {
                    Some(F::VariableName)
                }
            }
            TokenKind::Punctuation if t.lexeme == "[" => {
                let mut depth = 0usize;
                let mut close = None;
                for (j, u) in tokens.iter().enumerate().skip(i) {
                    if u.is_punct("[") {
                        depth += 1;
                    } else if u.is_punct("]") {
                        depth -= 1;
                        if depth == 0 {
                            close = Some(j);
                            break;
                        }
                    }
                }
                if let Some(j) = close {
                    if j > i + 1 {
                        out.push(Occurrence {
                            family: F::ArrayIndex,
                            text: render_tokens(&tokens[i + 1..j]),
                            left: "[".to_string(),
                            right: "]".to_string(),
                        });
                    }
                }
                None
            }
            _ => None,
        };
        if let Some(family) = family {
            out.push(Occurrence {
                family,
                text: t.lexeme.clone(),
                left: lexeme(ii - 1).to_string(),
                right: lexeme(ii + 1).to_string(),
            });
        }
    }
    out
}

fn collect_sources(path: &Path, out: &mut Vec<(String, String)>) -> Result<(), NgramError> {
    let io = |source| NgramError::Io {
        path: path.to_path_buf(),
        source,
    };
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io)?;
        entries.sort();
        for p in entries {
            if p.is_dir() || p.extension().is_some_and(|e| e == "minij") {
                collect_sources(&p, out)?;
            }
        }
    } else {
        let text = fs::read_to_string(path).map_err(io)?;
        out.push((path.display().to_string(), text));
    }
    Ok(())
}

impl NgramModel {
    /// Trains on `(name, source)` pairs.
    pub fn train<'a>(
        corpus: impl IntoIterator<Item = (&'a str, &'a str)>,
        order: u8,
    ) -> Result<NgramModel, NgramError> {
        let mut m = NgramModel {
            order: order.clamp(1, 3),
            ..Default::default()
        };
        let mut seen = 0usize;
        for (name, src) in corpus {
            let ts = lex(src).map_err(|errs| NgramError::Lex {
                path: name.to_string(),
                span: errs[0].span(),
            })?;
            seen += ts.tokens.len();
            for o in classify(&ts.tokens) {
                *m.unigram
                    .entry(o.family)
                    .or_default()
                    .entry(o.text.clone())
                    .or_default() += 1;
                *m.bigram
                    .entry(o.family)
                    .or_default()
                    .entry(o.left.clone())
                    .or_default()
                    .entry(o.text.clone())
                    .or_default() += 1;
                *m.trigram
                    .entry(o.family)
                    .or_default()
                    .entry(tri_key(&o.left, &o.right))
                    .or_default()
                    .entry(o.text)
                    .or_default() += 1;
            }
        }
        if seen == 0 {
            return Err(NgramError::EmptyCorpus);
        }
        Ok(m)
    }

    /// Trains on a `.minij` file or every `.minij` file below a directory.
    pub fn train_path(path: &Path, order: u8) -> Result<NgramModel, NgramError> {
        let mut sources = Vec::new();
        collect_sources(path, &mut sources)?;
        Self::train(sources.iter().map(|(n, s)| (n.as_str(), s.as_str())), order)
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    /// Same counts, queried at a different order.
    pub fn with_order(mut self, order: u8) -> NgramModel {
        self.order = order.clamp(1, 3);
        self
    }

    pub fn family_table(&self, family: OperatorFamily) -> Option<&BTreeMap<String, u64>> {
        self.unigram.get(&family)
    }

    pub fn save(&self, path: &Path) -> Result<(), NgramError> {
        let text = serde_json::to_string(self).map_err(|e| NgramError::Format(e.to_string()))?;
        fs::write(path, text).map_err(|source| NgramError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<NgramModel, NgramError> {
        let text = fs::read_to_string(path).map_err(|source| NgramError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| NgramError::Format(e.to_string()))
    }

    /// Top-5 for a family between `left` and `right`, padded with
    /// `original`.
    pub fn predict_tokens(
        &self,
        family: OperatorFamily,
        left: &str,
        right: &str,
        original: &str,
    ) -> Vec<Prediction> {
        self.predict_in_context(family, left, right, original, None)
    }

    /// Like [`predict_tokens`](Self::predict_tokens), with `local` counts
    /// from the surrounding code consulted after the conditioned corpus
    /// tables and before the family-wide one.
    pub fn predict_in_context(
        &self,
        family: OperatorFamily,
        left: &str,
        right: &str,
        original: &str,
        local: Option<&BTreeMap<String, u64>>,
    ) -> Vec<Prediction> {
        use OperatorFamily as F;
        let mut chain: Vec<&Table> = Vec::new();
        // Names are project-specific: the window's own identifiers rank
        // ahead of corpus statistics.
        let names_first = matches!(
            family,
            F::VariableName | F::MethodName | F::FieldName | F::TypeReference
        );
        let local = local.filter(|t| !t.is_empty());
        if names_first {
            chain.extend(local);
        }
        if self.order >= 3 {
            if let Some(t) = self
                .trigram
                .get(&family)
                .and_then(|m| m.get(&tri_key(left, right)))
            {
                chain.push(t);
            }
        }
        if self.order >= 2 {
            if let Some(t) = self.bigram.get(&family).and_then(|m| m.get(left)) {
                chain.push(t);
            }
        }
        if !names_first {
            chain.extend(local);
        }
        if let Some(t) = self.unigram.get(&family) {
            chain.push(t);
        }

        let mut out: Vec<(String, f64)> = Vec::with_capacity(TOP_K);
        for table in chain {
            let total: u64 = table.values().sum();
            let mut entries: Vec<(&String, &u64)> = table.iter().collect();
            entries.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
            for (tok, count) in entries {
                if out.len() == TOP_K {
                    break;
                }
                if out.iter().any(|(t, _)| t == tok) {
                    continue;
                }
                let mut score = *count as f64 / total as f64;
                if let Some((_, prev)) = out.last() {
                    score = score.min(*prev);
                }
                out.push((tok.clone(), score));
            }
        }
        while out.len() < TOP_K {
            out.push((original.to_string(), 0.0));
        }
        ranked(out)
    }
}

#[derive(Debug, Clone)]
pub struct NgramPredictor {
    model: NgramModel,
}

impl NgramPredictor {
    pub fn new(model: NgramModel) -> Self {
        NgramPredictor { model }
    }

    pub fn model(&self) -> &NgramModel {
        &self.model
    }
}

impl Predictor for NgramPredictor {
    fn predict(&self, seq: &MaskedSequence) -> Result<Vec<Prediction>, PredictError> {
        let k = seq
            .tokens
            .iter()
            .position(|t| t.kind == TokenKind::MaskMarker)
            .ok_or_else(|| PredictError::Malformed("no mask in sequence".to_string()))?;
        let left = if k == 0 {
            START
        } else {
            seq.tokens[k - 1].lexeme.as_str()
        };
        let right = seq.tokens.get(k + 1).map_or(END, |t| t.lexeme.as_str());
        let mut local = Table::new();
        for o in classify(&seq.tokens) {
            if o.family == seq.site.family && !o.text.contains("<mask>") {
                *local.entry(o.text).or_default() += 1;
            }
        }
        Ok(self.model.predict_in_context(
            seq.site.family,
            left,
            right,
            &seq.site.original,
            Some(&local),
        ))
    }

    fn describe(&self) -> String {
        format!("ngram (order {})", self.model.order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens(p: &[Prediction]) -> Vec<&str> {
        p.iter().map(|p| p.token.as_str()).collect()
    }

    #[test]
    fn single_operator_corpus_pads() {
        let m = NgramModel::train([("c", "a + b; a + c;")], 1).unwrap();
        assert_eq!(
            m.family_table(OperatorFamily::BinaryOp).unwrap().get("+"),
            Some(&2)
        );
        let p = m.predict_tokens(OperatorFamily::BinaryOp, "a", "b", "-");
        assert_eq!(tokens(&p), ["+", "-", "-", "-", "-"]);
        assert_eq!(p[0].score, 1.0);
        assert_eq!(p[4].score, 0.0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            NgramModel::train([("c", "  // nothing\n")], 2),
            Err(NgramError::EmptyCorpus)
        ));
    }

    #[test]
    fn classification() {
        let ts =
            lex("class A { int f(int[] xs) { xs[i + 1] -= -Math.abs(x.y); return this.g(); } }")
                .unwrap();
        let got: Vec<(OperatorFamily, String)> = classify(&ts.tokens)
            .into_iter()
            .map(|o| (o.family, o.text))
            .collect();
        use OperatorFamily as F;
        let want: Vec<(OperatorFamily, String)> = [
            (F::VariableName, "xs"),
            (F::ArrayIndex, "i + 1"),
            (F::VariableName, "i"),
            (F::BinaryOp, "+"),
            (F::Literal, "1"),
            (F::CompoundAssignOp, "-"),
            (F::UnaryOp, "-"),
            (F::TypeReference, "Math"),
            (F::MethodName, "abs"),
            (F::VariableName, "x"),
            (F::FieldName, "y"),
            (F::MethodName, "g"),
        ]
        .into_iter()
        .map(|(f, s)| (f, s.to_string()))
        .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn ties_break_lexicographically() {
        let m = NgramModel::train([("c", "a * b; a / b; a - b;")], 1).unwrap();
        let p = m.predict_tokens(OperatorFamily::BinaryOp, "a", "b", "%");
        assert_eq!(tokens(&p), ["*", "-", "/", "%", "%"]);
    }

    #[test]
    fn order_two_conditions_on_the_left_token() {
        // 10 tokens; binary ops: `+` after a, `-` after a, `+` after c.
        let src = "a + b ; a - b c + d";
        assert_eq!(lex(src).unwrap().tokens.len(), 10);
        let one = NgramModel::train([("c", src)], 1).unwrap();
        let two = one.clone().with_order(2);
        let scores = |m: &NgramModel, left: &str| -> Vec<(String, f64)> {
            m.predict_tokens(OperatorFamily::BinaryOp, left, "b", "*")
                .into_iter()
                .take(2)
                .map(|p| (p.token, p.score))
                .collect()
        };
        let s = |t: &str, x: f64| (t.to_string(), x);
        assert_eq!(scores(&one, "a"), [s("+", 2.0 / 3.0), s("-", 1.0 / 3.0)]);
        assert_eq!(scores(&one, "c"), [s("+", 2.0 / 3.0), s("-", 1.0 / 3.0)]);
        assert_eq!(scores(&two, "a"), [s("+", 0.5), s("-", 0.5)]);
        assert_eq!(scores(&two, "c"), [s("+", 1.0), s("-", 1.0 / 3.0)]);
    }

    #[test]
    fn toy_corpus_bigram() {
        let corpus = [
            (
                "a",
                "class A { boolean f(int year) { return year % 4 == 0; } }",
            ),
            (
                "b",
                "class B { boolean g(int year) { return year % 100 == 0; } }",
            ),
            ("c", "class C { int h(int year) { return year / 400; } }"),
        ];
        let m = NgramModel::train(corpus, 2).unwrap();
        let p = m.predict_tokens(OperatorFamily::BinaryOp, "year", "4", "%");
        assert_eq!(p[0].token, "%");
        assert_eq!(p[0].score, 2.0 / 3.0);
        assert_eq!(p[1].token, "/");
    }

    #[test]
    fn names_prefer_the_window() {
        let m = NgramModel::train([("c", "x = total + count;")], 2).unwrap();
        let local = BTreeMap::from([("lo".to_string(), 2), ("hi".to_string(), 1)]);
        let p = m.predict_in_context(OperatorFamily::VariableName, "=", ";", "x", Some(&local));
        assert_eq!(tokens(&p)[..2], ["lo", "hi"]);
        let p = m.predict_in_context(
            OperatorFamily::BinaryOp,
            "total",
            "count",
            "+",
            Some(&BTreeMap::from([("-".to_string(), 1)])),
        );
        assert_eq!(tokens(&p)[..2], ["+", "-"]);
    }

    #[test]
    fn saved_model_predicts_identically() {
        use crate::lang::compile_source;
        use crate::masking::{enumerate_sites, render_masked};

        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        let model = NgramModel::train_path(&dir.join("corpus"), 3).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = NgramModel::load(&path).unwrap();
        assert_eq!(loaded, model);

        let a = NgramPredictor::new(model);
        let b = NgramPredictor::new(loaded);
        let mut checked = 0;
        for f in [
            "faults/recursion/fixed.minij",
            "faults/operator_swap/fixed.minij",
            "golden/binary_search.minij",
        ] {
            let p = compile_source(&fs::read_to_string(dir.join(f)).unwrap()).unwrap();
            for site in enumerate_sites(&p) {
                let seq = render_masked(&p, &site);
                assert_eq!(a.predict(&seq).unwrap(), b.predict(&seq).unwrap());
                checked += 1;
            }
        }
        assert!(checked >= 100, "{checked} sites");
    }
}
