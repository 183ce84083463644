//! Kill matrices, mutation scores and real-fault detection.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lang::{
    compile_source, parse_test_file, run_test, CheckedProgram, ExecConfig, ExecOutcome, Executable,
    FrontendError, TestCase, TypeError, Verdict,
};

/// A viable mutant ready to execute.
#[derive(Debug, Clone)]
pub struct MutantProgram {
    pub id: u32,
    pub program: Arc<CheckedProgram>,
}

/// Tests × mutants verdicts. Tests that do not pass on the original are
/// kept in `tests` but have no verdict row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillMatrix {
    pub tests: Vec<String>,
    pub baseline: Vec<ExecOutcome>,
    pub mutants: Vec<u32>,
    /// `verdicts[t][m]`, `None` for excluded tests.
    pub verdicts: Vec<Option<Vec<Verdict>>>,
}

impl KillMatrix {
    pub fn active_tests(&self) -> Vec<usize> {
        (0..self.tests.len())
            .filter(|&t| self.verdicts[t].is_some())
            .collect()
    }

    pub fn excluded_tests(&self) -> Vec<usize> {
        (0..self.tests.len())
            .filter(|&t| self.verdicts[t].is_none())
            .collect()
    }

    /// `None` when test `t` is excluded.
    pub fn kills(&self, t: usize, m: usize) -> Option<bool> {
        self.verdicts[t].as_ref().map(|row| !row[m].is_pass())
    }

    pub fn is_killed(&self, m: usize) -> bool {
        (0..self.tests.len()).any(|t| self.kills(t, m) == Some(true))
    }

    /// Active tests killing mutant column `m`.
    pub fn killers(&self, m: usize) -> Vec<usize> {
        (0..self.tests.len())
            .filter(|&t| self.kills(t, m) == Some(true))
            .collect()
    }

    /// Mutant columns killed by test `t`.
    pub fn killed_by(&self, t: usize) -> Vec<usize> {
        (0..self.mutants.len())
            .filter(|&m| self.kills(t, m) == Some(true))
            .collect()
    }

    /// Header row of mutant ids; one row per test with `1`/`0`, and empty
    /// cells for excluded tests.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("test");
        for id in &self.mutants {
            let _ = write!(out, ",{id}");
        }
        out.push('\n');
        for (t, name) in self.tests.iter().enumerate() {
            out.push_str(name);
            for m in 0..self.mutants.len() {
                out.push(',');
                match self.kills(t, m) {
                    Some(true) => out.push('1'),
                    Some(false) => out.push('0'),
                    None => {}
                }
            }
            out.push('\n');
        }
        out
    }
}

fn run_all(exe: &Executable, active: &[usize], config: &ExecConfig) -> Vec<Verdict> {
    active
        .iter()
        .map(|&t| exe.run(t, config, None).verdict)
        .collect()
}

/// Runs every test on the original and on each mutant.
///
/// Fails only if a test does not type-check against the original program.
pub fn build_kill_matrix(
    program: &CheckedProgram,
    mutants: &[MutantProgram],
    tests: &[TestCase],
    config: &ExecConfig,
) -> Result<KillMatrix, Vec<TypeError>> {
    let original = Executable::new(program, tests, config.check_types)?;
    let baseline: Vec<ExecOutcome> = (0..tests.len())
        .map(|t| original.run(t, config, None))
        .collect();
    let active: Vec<usize> = (0..tests.len())
        .filter(|&t| baseline[t].verdict.is_pass())
        .collect();
    for (t, b) in baseline.iter().enumerate() {
        if !b.verdict.is_pass() {
            log::warn!(
                "test `{}` does not pass on the original program ({}); excluded",
                tests[t].name,
                b.verdict
            );
        }
    }

    let columns: Vec<Vec<Verdict>> = mutants
        .par_iter()
        .map(
            |m| match Executable::new(&m.program, tests, config.check_types) {
                Ok(exe) => run_all(&exe, &active, config),
                Err(_) => active
                    .iter()
                    .map(|&t| run_test(&m.program, &tests[t], config).verdict)
                    .collect(),
            },
        )
        .collect();

    let mut verdicts: Vec<Option<Vec<Verdict>>> = vec![None; tests.len()];
    for (row, &t) in active.iter().enumerate() {
        verdicts[t] = Some(columns.iter().map(|col| col[row]).collect());
    }
    Ok(KillMatrix {
        tests: tests.iter().map(|t| t.name.clone()).collect(),
        baseline,
        mutants: mutants.iter().map(|m| m.id).collect(),
        verdicts,
    })
}

/// Fraction of mutants killed by some test; 1.0 when there are no mutants.
pub fn mutation_score(matrix: &KillMatrix) -> f64 {
    if matrix.mutants.is_empty() {
        return 1.0;
    }
    let killed = (0..matrix.mutants.len())
        .filter(|&m| matrix.is_killed(m))
        .count();
    killed as f64 / matrix.mutants.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub mutants: usize,
    pub killed: usize,
    pub score: f64,
    pub tests_active: usize,
    pub tests_excluded: Vec<String>,
}

pub fn score_report(matrix: &KillMatrix) -> ScoreReport {
    ScoreReport {
        mutants: matrix.mutants.len(),
        killed: (0..matrix.mutants.len())
            .filter(|&m| matrix.is_killed(m))
            .count(),
        score: mutation_score(matrix),
        tests_active: matrix.active_tests().len(),
        tests_excluded: matrix
            .excluded_tests()
            .into_iter()
            .map(|t| matrix.tests[t].clone())
            .collect(),
    }
}

/// Greedy set cover: repeatedly takes the test killing the most mutants not
/// yet killed (lowest index on ties) until every killable mutant is killed.
/// Returns test indices in selection order.
pub fn minimal_killing_suite(matrix: &KillMatrix) -> Vec<usize> {
    let mut remaining: Vec<bool> = (0..matrix.mutants.len())
        .map(|m| matrix.is_killed(m))
        .collect();
    let kills: Vec<Vec<usize>> = (0..matrix.tests.len())
        .map(|t| matrix.killed_by(t))
        .collect();
    let mut suite = Vec::new();
    loop {
        let best = kills
            .iter()
            .enumerate()
            .map(|(t, ms)| (t, ms.iter().filter(|&&m| remaining[m]).count()))
            .filter(|&(_, n)| n > 0)
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
        match best {
            None => return suite,
            Some((t, _)) => {
                for &m in &kills[t] {
                    remaining[m] = false;
                }
                suite.push(t);
            }
        }
    }
}

/// A fixed and a faulty version of one program, sharing a test pool.
#[derive(Debug, Clone)]
pub struct FaultPair {
    pub name: String,
    pub fixed: CheckedProgram,
    pub faulty: CheckedProgram,
    pub pool: Vec<TestCase>,
}

#[derive(Debug, thiserror::Error)]
pub enum FaultPairError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Frontend { path: String, source: FrontendError },
}

fn read(path: &Path) -> Result<String, FaultPairError> {
    fs::read_to_string(path).map_err(|source| FaultPairError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl FaultPair {
    /// Loads `fixed.minij`, `faulty.minij` and `pool.mjtest` from `dir`.
    pub fn load(dir: &Path) -> Result<FaultPair, FaultPairError> {
        let compile = |name: &str| -> Result<CheckedProgram, FaultPairError> {
            let path = dir.join(name);
            compile_source(&read(&path)?).map_err(|source| FaultPairError::Frontend {
                path: path.display().to_string(),
                source,
            })
        };
        let pool_path = dir.join("pool.mjtest");
        let pool =
            parse_test_file(&read(&pool_path)?).map_err(|source| FaultPairError::Frontend {
                path: pool_path.display().to_string(),
                source,
            })?;
        Ok(FaultPair {
            name: dir.file_name().map_or_else(
                || dir.display().to_string(),
                |n| n.to_string_lossy().into_owned(),
            ),
            fixed: compile("fixed.minij")?,
            faulty: compile("faulty.minij")?,
            pool,
        })
    }

    /// Whether `test` passes on the fixed version and not on the faulty one.
    pub fn triggers(&self, test: &TestCase, config: &ExecConfig) -> bool {
        run_test(&self.fixed, test, config).verdict.is_pass()
            && !run_test(&self.faulty, test, config).verdict.is_pass()
    }
}

/// True iff some test of `suite` passes on the fixed version and not on the
/// faulty one.
pub fn detects_fault(suite: &[TestCase], pair: &FaultPair, config: &ExecConfig) -> bool {
    suite.iter().any(|t| pair.triggers(t, config))
}
