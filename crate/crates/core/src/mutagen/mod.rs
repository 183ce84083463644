//! From predictions to mutants.
//!
//! Each of the five candidates of a site is classified in order: identical
//! to the original, duplicate of an earlier rank at the same site, then
//! compiled. Ids are dense over all candidates, in site order then rank.

mod store;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lang::{compile_source, lex, CheckedProgram, FrontendError, Span};
use crate::masking::{enumerate_sites, render_masked, MaskSite, OperatorFamily};
use crate::predict::{validate_predictions, PredictError, Predictor};

pub use store::{load_store, persist_store, read_store, write_store, MutantRecord, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutantStatus {
    Viable,
    IdenticalDiscarded,
    DuplicateDiscarded,
    NonCompilingDiscarded,
}

impl MutantStatus {
    pub const ALL: [MutantStatus; 4] = [
        MutantStatus::Viable,
        MutantStatus::IdenticalDiscarded,
        MutantStatus::DuplicateDiscarded,
        MutantStatus::NonCompilingDiscarded,
    ];
}

#[derive(Debug, Clone)]
pub struct Mutant {
    pub id: u32,
    pub site: MaskSite,
    pub rank: u8,
    /// Trimmed prediction text.
    pub replacement: String,
    pub status: MutantStatus,
    /// The checked mutated program, present iff viable.
    pub program: Option<Arc<CheckedProgram>>,
}

impl Mutant {
    pub fn is_viable(&self) -> bool {
        self.status == MutantStatus::Viable
    }
}

/// A site whose prediction failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSite {
    pub family: OperatorFamily,
    pub span: Span,
    pub original: String,
    pub error: String,
    pub unreachable: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyCounts {
    pub sites: usize,
    pub candidates: usize,
    pub viable: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantSetReport {
    pub predictor: String,
    pub sites: usize,
    pub sites_predicted: usize,
    pub sites_skipped: usize,
    /// Five per predicted site.
    pub candidates: usize,
    pub by_status: BTreeMap<MutantStatus, usize>,
    pub by_family: BTreeMap<OperatorFamily, FamilyCounts>,
    pub viable: usize,
    pub skipped: Vec<SkippedSite>,
}

impl MutantSetReport {
    /// Whether any site failed because the backend could not be reached.
    pub fn backend_unreachable(&self) -> bool {
        self.skipped.iter().any(|s| s.unreachable)
    }
}

#[derive(Debug, Clone)]
pub struct Generation {
    pub mutants: Vec<Mutant>,
    pub report: MutantSetReport,
}

impl Generation {
    pub fn viable(&self) -> impl Iterator<Item = &Mutant> {
        self.mutants.iter().filter(|m| m.is_viable())
    }

    pub fn records(&self, program: &CheckedProgram) -> Vec<MutantRecord> {
        self.mutants
            .iter()
            .map(|m| MutantRecord::from_mutant(program, m))
            .collect()
    }
}

/// Comparison key of a replacement: its token lexemes, or the trimmed text
/// if it does not lex.
fn normal_key(text: &str) -> String {
    match lex(text) {
        Ok(ts) => ts
            .tokens
            .iter()
            .map(|t| t.lexeme.as_str())
            .collect::<Vec<_>>()
            .join(" "),
        Err(_) => text.trim().to_string(),
    }
}

/// The original source with the site's span replaced by `replacement`.
pub fn materialize(program: &CheckedProgram, span: Span, replacement: &str) -> String {
    let src = program.source();
    let mut out = String::with_capacity(src.len() + replacement.len());
    out.push_str(&src[..span.start]);
    out.push_str(replacement);
    out.push_str(&src[span.end..]);
    out
}

/// Re-creates a viable mutant's program from the original and a stored
/// record.
pub fn rebuild(
    program: &CheckedProgram,
    record: &MutantRecord,
) -> Result<CheckedProgram, FrontendError> {
    compile_source(&materialize(program, record.span, &record.replacement))
}

struct Candidate {
    rank: u8,
    replacement: String,
    status: MutantStatus,
    program: Option<Arc<CheckedProgram>>,
}

fn classify_site(
    program: &CheckedProgram,
    site: &MaskSite,
    predictions: &[String],
) -> Vec<Candidate> {
    let original = normal_key(&site.original);
    let mut seen: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for (i, raw) in predictions.iter().enumerate() {
        let replacement = raw.trim().to_string();
        let key = normal_key(&replacement);
        let (status, compiled) = if replacement == site.original || key == original {
            (MutantStatus::IdenticalDiscarded, None)
        } else if seen.contains(&key) {
            (MutantStatus::DuplicateDiscarded, None)
        } else {
            match compile_source(&materialize(program, site.span, &replacement)) {
                Ok(p) => (MutantStatus::Viable, Some(Arc::new(p))),
                Err(_) => (MutantStatus::NonCompilingDiscarded, None),
            }
        };
        seen.push(key);
        out.push(Candidate {
            rank: (i + 1) as u8,
            replacement,
            status,
            program: compiled,
        });
    }
    out
}

/// Classifies given predictions for one site, without a predictor.
pub fn classify_predictions(
    program: &CheckedProgram,
    site: &MaskSite,
    predictions: &[String],
) -> Vec<(String, MutantStatus)> {
    classify_site(program, site, predictions)
        .into_iter()
        .map(|c| (c.replacement, c.status))
        .collect()
}

/// Generates and classifies mutants for every site of `program`.
pub fn generate(program: &CheckedProgram, predictor: &dyn Predictor) -> Generation {
    let sites = enumerate_sites(program);
    let outcomes: Vec<Result<Vec<Candidate>, PredictError>> = sites
        .par_iter()
        .map(|site| {
            let seq = render_masked(program, site);
            let preds = predictor.predict(&seq)?;
            validate_predictions(&preds)?;
            let tokens: Vec<String> = preds.into_iter().map(|p| p.token).collect();
            Ok(classify_site(program, site, &tokens))
        })
        .collect();

    let mut report = MutantSetReport {
        predictor: predictor.describe(),
        sites: sites.len(),
        ..Default::default()
    };
    for s in MutantStatus::ALL {
        report.by_status.insert(s, 0);
    }
    let mut mutants = Vec::new();
    for (site, outcome) in sites.into_iter().zip(outcomes) {
        let fam = report.by_family.entry(site.family).or_default();
        fam.sites += 1;
        match outcome {
            Err(e) => {
                report.sites_skipped += 1;
                report.skipped.push(SkippedSite {
                    family: site.family,
                    span: site.span,
                    original: site.original.clone(),
                    unreachable: e.is_unreachable(),
                    error: e.to_string(),
                });
            }
            Ok(cands) => {
                report.sites_predicted += 1;
                for c in cands {
                    fam.candidates += 1;
                    if c.status == MutantStatus::Viable {
                        fam.viable += 1;
                    }
                    *report.by_status.entry(c.status).or_default() += 1;
                    mutants.push(Mutant {
                        id: mutants.len() as u32,
                        site: site.clone(),
                        rank: c.rank,
                        replacement: c.replacement,
                        status: c.status,
                        program: c.program,
                    });
                }
            }
        }
    }
    report.candidates = mutants.len();
    report.viable = report.by_status[&MutantStatus::Viable];
    Generation { mutants, report }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::enumerate_sites;

    fn statuses(
        src: &str,
        pick: impl Fn(&MaskSite) -> bool,
        preds: &[&str],
    ) -> Vec<(String, MutantStatus)> {
        let p = compile_source(src).unwrap();
        let site = enumerate_sites(&p).into_iter().find(|s| pick(s)).unwrap();
        let preds: Vec<String> = preds.iter().map(|s| s.to_string()).collect();
        classify_predictions(&p, &site, &preds)
    }

    #[test]
    fn whitespace_variants_are_identical_or_duplicate() {
        use MutantStatus::*;
        let got = statuses(
            "class L { boolean f(int year) { return year % 4 == 0; } }",
            |s| s.original == "%",
            &[" %", "/", "%", "-", " /"],
        );
        let st: Vec<_> = got.iter().map(|g| g.1).collect();
        assert_eq!(
            st,
            [
                IdenticalDiscarded,
                Viable,
                IdenticalDiscarded,
                Viable,
                DuplicateDiscarded
            ]
        );
        assert_eq!(got[0].0, "%");
    }

    #[test]
    fn token_equal_index_is_identical() {
        let got = statuses(
            "class S { int g(int[] arr, int mid) { return arr[mid - 1]; } }",
            |s| s.family == OperatorFamily::ArrayIndex,
            &["mid-1", "0", "mid", "0", "x"],
        );
        use MutantStatus::*;
        let st: Vec<_> = got.iter().map(|g| g.1).collect();
        assert_eq!(
            st,
            [
                IdenticalDiscarded,
                Viable,
                Viable,
                DuplicateDiscarded,
                NonCompilingDiscarded
            ]
        );
    }

    #[test]
    fn compound_operator_splices_before_equals() {
        let src = "class A { int f(int a, int b) { a += b; return a; } }";
        let p = compile_source(src).unwrap();
        let site = enumerate_sites(&p)
            .into_iter()
            .find(|s| s.family == OperatorFamily::CompoundAssignOp)
            .unwrap();
        assert!(materialize(&p, site.span, "*").contains("a *= b;"));
    }

    #[test]
    fn materialized_text_changes_only_the_span() {
        let src = "class A { int f(int a, int b) { return a + b; } }";
        let p = compile_source(src).unwrap();
        let site = enumerate_sites(&p)
            .into_iter()
            .find(|s| s.original == "+")
            .unwrap();
        let m = materialize(&p, site.span, "-");
        assert_eq!(m, "class A { int f(int a, int b) { return a - b; } }");
    }
}
