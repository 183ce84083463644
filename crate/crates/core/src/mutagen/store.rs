//! `mutants.jsonl`: one JSON object per line, in id order.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Mutant, MutantStatus};
use crate::lang::{CheckedProgram, Span};
use crate::masking::OperatorFamily;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutantRecord {
    pub id: u32,
    pub family: OperatorFamily,
    /// `Class.method` enclosing the site.
    pub method: String,
    pub span: Span,
    pub rank: u8,
    pub original: String,
    pub replacement: String,
    pub status: MutantStatus,
}

impl MutantRecord {
    pub fn from_mutant(program: &CheckedProgram, m: &Mutant) -> MutantRecord {
        let class = &program.classes[m.site.method.class as usize];
        let method = program.method_by_ref(m.site.method);
        MutantRecord {
            id: m.id,
            family: m.site.family,
            method: format!("{}.{}", class.name.name, method.name.name),
            span: m.site.span,
            rank: m.rank,
            original: m.site.original.clone(),
            replacement: m.replacement.clone(),
            status: m.status,
        }
    }

    pub fn is_viable(&self) -> bool {
        self.status == MutantStatus::Viable
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn persist_store(records: &[MutantRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Parses a store; blank lines are ignored, anything else must be a record.
pub fn load_store(text: &str) -> Result<Vec<MutantRecord>, StoreError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: MutantRecord = serde_json::from_str(line).map_err(|e| StoreError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_store(path: &Path, records: &[MutantRecord]) -> io::Result<()> {
    fs::write(path, persist_store(records))
}

pub fn read_store(path: &Path) -> Result<Vec<MutantRecord>, StoreError> {
    load_store(&fs::read_to_string(path)?)
}
