//! The `mutamask` command line.
//!
//! Exit codes: 0 on success, 1 on output errors, 2 on input errors, 3 when
//! the prediction backend could not be reached (the partial report is still
//! written).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use similar::TextDiff;

use crate::analysis::{
    build_kill_matrix, minimal_killing_suite, score_report, FaultPair, KillMatrix, MutantProgram,
    ScoreReport,
};
use crate::assertions::{filter_assertions, parse_assertions, FilterReport};
use crate::lang::{compile_source, parse_test_file, CheckedProgram, ExecConfig, TestCase};
use crate::mutagen::{generate, materialize, read_store, rebuild, write_store, MutantRecord};
use crate::predict::PredictorConfig;
use crate::simulate::{run_simulation, Policy, Problem, SimulationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "mutamask",
    version,
    about = "Mutation testing for MiniJ with masked-token prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mask every site, predict replacements and write the mutant store.
    Mutate(Common),
    /// Run the tests against every viable mutant and score the suite.
    Analyze(Common),
    /// Simulate a tester analysing mutants until none is left.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Faulty version of `--program`.
        #[arg(long)]
        faulty: Option<PathBuf>,
        #[arg(long)]
        repetitions: Option<usize>,
        /// uniform or max-additional-kills.
        #[arg(long)]
        policy: Option<Policy>,
        #[arg(long)]
        effort_cap: Option<usize>,
    },
    /// Keep the assertions that kill at least one mutant.
    Assertions {
        #[command(flatten)]
        common: Common,
        /// `.mjassert` file.
        #[arg(long)]
        assertions: Option<PathBuf>,
    },
    /// Print a mutant as a unified diff against the original.
    Show {
        id: u32,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// MiniJ source file.
    #[arg(long)]
    pub program: Option<PathBuf>,
    /// `.mjtest` file.
    #[arg(long)]
    pub tests: Option<PathBuf>,
    /// ngram[:ORDER]:PATH, fixture:PATH or http:URL.
    #[arg(long)]
    pub predictor: Option<String>,
    /// Step budget per test execution.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Configuration file; `./mutamask.toml` is read when present.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PredictorEntry {
    Spec(String),
    Table(PredictorConfig),
}

/// `mutamask.toml`. Paths are relative to the file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    program: Option<PathBuf>,
    tests: Option<PathBuf>,
    predictor: Option<PredictorEntry>,
    budget: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    faulty: Option<PathBuf>,
    assertions: Option<PathBuf>,
    repetitions: Option<usize>,
    policy: Option<String>,
    effort_cap: Option<usize>,
}

/// Flags merged over the configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub program: Option<PathBuf>,
    pub tests: Option<PathBuf>,
    pub predictor: Option<PredictorConfig>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub faulty: Option<PathBuf>,
    pub assertions: Option<PathBuf>,
    pub repetitions: Option<usize>,
    pub policy: Option<Policy>,
    pub effort_cap: Option<usize>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Output(String),
    Unreachable(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Output(_) => EXIT_OUTPUT,
            CliError::Unreachable(_) => EXIT_UNREACHABLE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Output(m) | CliError::Unreachable(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn load_file_config(common: &Common) -> CliResult<(FileConfig, PathBuf)> {
    let path = match &common.config {
        Some(p) => p.clone(),
        None => {
            let p = PathBuf::from("mutamask.toml");
            if !p.exists() {
                return Ok((FileConfig::default(), PathBuf::from(".")));
            }
            p
        }
    };
    let text = fs::read_to_string(&path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let cfg: FileConfig =
        toml::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, dir))
}

impl RunConfig {
    fn resolve(
        common: &Common,
        faulty: Option<PathBuf>,
        assertions: Option<PathBuf>,
        repetitions: Option<usize>,
        policy: Option<Policy>,
        effort_cap: Option<usize>,
    ) -> CliResult<RunConfig> {
        let (file, dir) = load_file_config(common)?;
        let rel = |p: Option<PathBuf>| p.map(|p| dir.join(p));
        let predictor = match &common.predictor {
            Some(s) => Some(
                s.parse::<PredictorConfig>()
                    .map_err(|e| input(e.to_string()))?,
            ),
            None => match file.predictor {
                Some(PredictorEntry::Spec(s)) => Some(
                    s.parse::<PredictorConfig>()
                        .map_err(|e| input(e.to_string()))?
                        .rebase(&dir),
                ),
                Some(PredictorEntry::Table(t)) => Some(t.rebase(&dir)),
                None => None,
            },
        };
        let policy = match (policy, &file.policy) {
            (Some(p), _) => Some(p),
            (None, Some(s)) => Some(s.parse().map_err(input)?),
            (None, None) => None,
        };
        Ok(RunConfig {
            program: common.program.clone().or(rel(file.program)),
            tests: common.tests.clone().or(rel(file.tests)),
            predictor,
            budget: common.budget.or(file.budget),
            seed: common.seed.or(file.seed),
            out: common
                .out
                .clone()
                .or(rel(file.out))
                .unwrap_or_else(|| PathBuf::from("mutamask-out")),
            faulty: faulty.or(rel(file.faulty)),
            assertions: assertions.or(rel(file.assertions)),
            repetitions: repetitions.or(file.repetitions),
            policy,
            effort_cap: effort_cap.or(file.effort_cap),
        })
    }

    fn exec_config(&self) -> ExecConfig {
        let mut c = ExecConfig::default();
        if let Some(b) = self.budget {
            c.budget = b;
        }
        if let Some(s) = self.seed {
            c.random_seed = s;
        }
        c
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    p.as_deref()
        .ok_or_else(|| input(format!("missing --{flag}")))
}

fn load_program(path: &Path) -> CliResult<CheckedProgram> {
    let src = read(path)?;
    compile_source(&src).map_err(|e| {
        let s = e.span();
        input(format!("{}:{}:{}: {e}", path.display(), s.line, s.col))
    })
}

fn load_tests(path: &Path) -> CliResult<Vec<TestCase>> {
    let src = read(path)?;
    parse_test_file(&src).map_err(|e| {
        let s = e.span();
        input(format!("{}:{}:{}: {e}", path.display(), s.line, s.col))
    })
}

fn write_out(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn store_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("mutants.jsonl")
}

fn load_records(cfg: &RunConfig) -> CliResult<Vec<MutantRecord>> {
    let path = store_path(cfg);
    if !path.exists() {
        return Err(input(format!(
            "{}: no mutant store; run `mutamask mutate` first",
            path.display()
        )));
    }
    read_store(&path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn viable_programs(
    program: &CheckedProgram,
    records: &[MutantRecord],
) -> CliResult<Vec<MutantProgram>> {
    records
        .iter()
        .filter(|r| r.is_viable())
        .map(|r| {
            rebuild(program, r)
                .map(|p| MutantProgram {
                    id: r.id,
                    program: Arc::new(p),
                })
                .map_err(|e| {
                    input(format!(
                        "mutant {} no longer compiles against the program: {e}",
                        r.id
                    ))
                })
        })
        .collect()
}

fn cmd_mutate(cfg: &RunConfig) -> CliResult<()> {
    let program = load_program(require(&cfg.program, "program")?)?;
    let predictor = cfg
        .predictor
        .as_ref()
        .ok_or_else(|| input("missing --predictor"))?
        .build()
        .map_err(|e| input(e.to_string()))?;
    let gen = generate(&program, predictor.as_ref());
    fs::create_dir_all(&cfg.out)
        .and_then(|_| write_store(&store_path(cfg), &gen.records(&program)))
        .map_err(|e| CliError::Output(format!("{}: {e}", store_path(cfg).display())))?;
    write_out(&cfg.out, "report.json", &to_json(&gen.report))?;
    println!(
        "{} sites, {} candidates, {} viable mutants",
        gen.report.sites, gen.report.candidates, gen.report.viable
    );
    if gen.report.backend_unreachable() {
        return Err(CliError::Unreachable(format!(
            "prediction backend unreachable; {} of {} sites skipped, partial report written",
            gen.report.sites_skipped, gen.report.sites
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ScoreFile<'a> {
    #[serde(flatten)]
    score: &'a ScoreReport,
    minimal_suite: Vec<String>,
}

fn cmd_analyze(cfg: &RunConfig) -> CliResult<()> {
    let program = load_program(require(&cfg.program, "program")?)?;
    let tests = load_tests(require(&cfg.tests, "tests")?)?;
    if tests.is_empty() {
        log::warn!("no tests; every mutant survives");
    }
    let mutants = viable_programs(&program, &load_records(cfg)?)?;
    let matrix = build_kill_matrix(&program, &mutants, &tests, &cfg.exec_config())
        .map_err(|errs| input(format!("tests do not type-check: {}", errs[0])))?;
    let report = score_report(&matrix);
    let suite = minimal_killing_suite(&matrix)
        .into_iter()
        .map(|t| matrix.tests[t].clone())
        .collect();
    write_out(&cfg.out, "matrix.csv", &matrix.to_csv())?;
    write_out(&cfg.out, "matrix.json", &to_json(&matrix))?;
    write_out(
        &cfg.out,
        "score.json",
        &to_json(&ScoreFile {
            score: &report,
            minimal_suite: suite,
        }),
    )?;
    println!(
        "mutation score {:.4} ({} of {} killed)",
        report.score, report.killed, report.mutants
    );
    Ok(())
}

#[derive(Serialize)]
struct SimulationSummary {
    seed: u64,
    repetitions: usize,
    policy: Policy,
    mutants: usize,
    tests: Vec<String>,
    triggering_tests: Vec<String>,
    mean_effort: f64,
    detection_rate: f64,
}

fn cmd_simulate(cfg: &RunConfig) -> CliResult<()> {
    let seed = cfg.seed.ok_or_else(|| input("simulate requires --seed"))?;
    let matrix_path = cfg.out.join("matrix.json");
    if !matrix_path.exists() {
        return Err(input(format!(
            "{}: no kill matrix; run `mutamask analyze` first",
            matrix_path.display()
        )));
    }
    let matrix: KillMatrix = serde_json::from_str(&read(&matrix_path)?)
        .map_err(|e| input(format!("{}: {e}", matrix_path.display())))?;
    let pair = FaultPair {
        name: String::new(),
        fixed: load_program(require(&cfg.program, "program")?)?,
        faulty: load_program(require(&cfg.faulty, "faulty")?)?,
        pool: load_tests(require(&cfg.tests, "tests")?)?,
    };
    let names: Vec<&str> = pair.pool.iter().map(|t| t.name.as_str()).collect();
    if names != matrix.tests.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(input(
            "the tests do not match the kill matrix; rerun `mutamask analyze`",
        ));
    }
    let exec = cfg.exec_config();
    let triggers: Vec<bool> = pair.pool.iter().map(|t| pair.triggers(t, &exec)).collect();
    let (problem, active) = Problem::from_matrix(&matrix, &triggers);
    let mut sim = SimulationConfig::new(seed);
    if let Some(r) = cfg.repetitions {
        if r == 0 {
            return Err(input("--repetitions must be at least 1"));
        }
        sim.repetitions = r;
    }
    sim.policy = cfg.policy.unwrap_or_default();
    sim.effort_cap = cfg.effort_cap;
    let result = run_simulation(&problem, &sim);

    let mut sessions = String::new();
    for s in &result.sessions {
        sessions.push_str(&serde_json::to_string(s).expect("traces serialize"));
        sessions.push('\n');
    }
    let active_names: Vec<String> = active.iter().map(|&t| matrix.tests[t].clone()).collect();
    let summary = SimulationSummary {
        seed,
        repetitions: sim.repetitions,
        policy: sim.policy,
        mutants: matrix.mutants.len(),
        triggering_tests: active
            .iter()
            .zip(&problem.triggers)
            .filter(|(_, &t)| t)
            .map(|(&i, _)| matrix.tests[i].clone())
            .collect(),
        tests: active_names,
        mean_effort: result.mean_effort(),
        detection_rate: result.detection_rate(),
    };
    write_out(&cfg.out, "curve.csv", &result.curve_csv())?;
    write_out(&cfg.out, "sessions.jsonl", &sessions)?;
    write_out(&cfg.out, "simulation.json", &to_json(&summary))?;
    println!(
        "seed {seed}: mean effort {:.3}, fault detected in {:.1}% of {} sessions",
        summary.mean_effort,
        100.0 * summary.detection_rate,
        sim.repetitions
    );
    Ok(())
}

/// One row per assertion, with the counts of the assertion table: success,
/// mutants evaluated and mutants killed.
#[derive(Serialize)]
struct VerdictRow<'a> {
    assertion: &'a str,
    success: bool,
    mutants: usize,
    killed: usize,
}

#[derive(Serialize)]
struct VerdictFile<'a> {
    summary: Vec<VerdictRow<'a>>,
    #[serde(flatten)]
    report: &'a FilterReport,
}

fn cmd_assertions(cfg: &RunConfig) -> CliResult<()> {
    let program = load_program(require(&cfg.program, "program")?)?;
    let tests = load_tests(require(&cfg.tests, "tests")?)?;
    let apath = require(&cfg.assertions, "assertions")?;
    let specs = parse_assertions(&program, &read(apath)?)
        .map_err(|e| input(format!("{}:{e}", apath.display())))?;
    let mutants = viable_programs(&program, &load_records(cfg)?)?;
    let report = filter_assertions(&specs, &program, &mutants, &tests, &cfg.exec_config())
        .map_err(|errs| input(format!("tests do not type-check: {}", errs[0])))?;
    for r in &report.rejected {
        log::warn!(
            "{} does not hold on the original program (test `{}`)",
            r.assertion,
            r.counterexample.test
        );
    }
    let summary = report
        .verdicts
        .iter()
        .map(|v| VerdictRow {
            assertion: &v.assertion,
            success: !v.mutants_killed.is_empty(),
            mutants: v.mutants_evaluated,
            killed: v.mutants_killed.len(),
        })
        .collect();
    write_out(
        &cfg.out,
        "verdicts.json",
        &to_json(&VerdictFile {
            summary,
            report: &report,
        }),
    )?;
    let kept = report
        .verdicts
        .iter()
        .filter(|v| !v.mutants_killed.is_empty())
        .count();
    println!(
        "{kept} kept, {} discarded, {} rejected",
        report.verdicts.len() - kept,
        report.rejected.len()
    );
    Ok(())
}

/// The unified diff between the original source and mutant `record`.
pub fn mutant_diff(program: &CheckedProgram, record: &MutantRecord, file: &str) -> String {
    let mutated = materialize(program, record.span, &record.replacement);
    TextDiff::from_lines(program.source(), mutated.as_str())
        .unified_diff()
        .context_radius(3)
        .header(&format!("a/{file}"), &format!("b/{file}"))
        .to_string()
}

fn cmd_show(cfg: &RunConfig, id: u32) -> CliResult<String> {
    let path = require(&cfg.program, "program")?;
    let program = load_program(path)?;
    let records = load_records(cfg)?;
    let record = records
        .iter()
        .find(|r| r.id == id)
        .ok_or_else(|| input(format!("no mutant with id {id}")))?;
    let file = path.file_name().map_or_else(
        || "program.minij".to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    Ok(mutant_diff(&program, record, &file))
}

/// Runs the command line `args` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Mutate(common) => RunConfig::resolve(&common, None, None, None, None, None)
            .and_then(|cfg| cmd_mutate(&cfg)),
        Command::Analyze(common) => RunConfig::resolve(&common, None, None, None, None, None)
            .and_then(|cfg| cmd_analyze(&cfg)),
        Command::Simulate {
            common,
            faulty,
            repetitions,
            policy,
            effort_cap,
        } => RunConfig::resolve(&common, faulty, None, repetitions, policy, effort_cap)
            .and_then(|cfg| cmd_simulate(&cfg)),
        Command::Assertions { common, assertions } => {
            RunConfig::resolve(&common, None, assertions, None, None, None)
                .and_then(|cfg| cmd_assertions(&cfg))
        }
        Command::Show { id, common } => RunConfig::resolve(&common, None, None, None, None, None)
            .and_then(|cfg| cmd_show(&cfg, id))
            .map(|diff| {
                let _ = std::io::stdout().write_all(diff.as_bytes());
            }),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("mutamask.toml");
        fs::write(
            &cfg,
            "program = \"p.minij\"\nseed = 1\nbudget = 10\npredictor = \"fixture:f.json\"\npolicy = \"max-additional-kills\"\n",
        )
        .unwrap();
        let common = Common {
            seed: Some(9),
            config: Some(cfg),
            ..Common::default()
        };
        let rc = RunConfig::resolve(&common, None, None, None, None, None).unwrap();
        assert_eq!(rc.seed, Some(9));
        assert_eq!(rc.budget, Some(10));
        assert_eq!(rc.program, Some(dir.path().join("p.minij")));
        assert_eq!(
            rc.predictor,
            Some(PredictorConfig::Fixture {
                path: dir.path().join("f.json")
            })
        );
        assert_eq!(rc.policy, Some(Policy::MaxAdditionalKills));
    }

    #[test]
    fn predictor_table_in_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        fs::write(
            &cfg,
            "[predictor]\nbackend = \"ngram\"\norder = 2\ncorpus = \"corpus\"\n",
        )
        .unwrap();
        let common = Common {
            config: Some(cfg),
            ..Common::default()
        };
        let rc = RunConfig::resolve(&common, None, None, None, None, None).unwrap();
        assert_eq!(
            rc.predictor,
            Some(PredictorConfig::Ngram {
                order: 2,
                corpus: dir.path().join("corpus")
            })
        );
    }

    #[test]
    fn unknown_config_keys_are_input_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        fs::write(&cfg, "programme = \"x\"\n").unwrap();
        let common = Common {
            config: Some(cfg),
            ..Common::default()
        };
        let err = RunConfig::resolve(&common, None, None, None, None, None).unwrap_err();
        assert_eq!(err.code(), EXIT_INPUT);
    }
}
