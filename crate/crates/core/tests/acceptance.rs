//! One PASS/FAIL line per acceptance criterion. Exits non-zero on any FAIL.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::chain::{compare, exact, random_problems};
use common::faults::{harness, PAIRS};
use common::gen::{program_text, HashPredictor};
use common::{fixture, generate_with_fixture, program, tests, viable_at, viable_programs};
use mutamask::analysis::build_kill_matrix;
use mutamask::assertions::{filter_assertions, parse_assertions, AssertionStatus};
use mutamask::lang::{compile_source, ExecConfig};
use mutamask::masking::{enumerate_sites, render_masked, OperatorFamily};
use mutamask::mutagen::{generate, load_store, materialize, persist_store, MutantRecord};
use mutamask::predict::FixturePredictor;
use mutamask::simulate::{run_simulation, Policy, Problem, SimulationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const GOLDEN_SECONDS: f64 = 5.0;
const GENERATED_CASES: u64 = 1000;
const MEAN_EFFORT_REL: f64 = 0.01;
const FAULTS_REQUIRED: usize = 4;

fn golden() -> Check {
    let start = Instant::now();
    let cases: [(&str, OperatorFamily, &str, &[&str]); 5] = [
        ("leap_year", OperatorFamily::BinaryOp, "%", &["/", "-"]),
        ("print_array", OperatorFamily::UnaryOp, "--", &["++"]),
        (
            "leap_year",
            OperatorFamily::Literal,
            "4",
            &["100", "400", "10", "2"],
        ),
        (
            "composite",
            OperatorFamily::MethodName,
            "add",
            &["push", "remove"],
        ),
        (
            "binary_search",
            OperatorFamily::ArrayIndex,
            "mid - 1",
            &["0", "n", "mid", "1", "low"],
        ),
    ];
    for (name, family, original, want) in cases {
        let p = program(&format!("golden/{name}.minij"));
        let gen = generate_with_fixture(&p, &format!("golden/{name}.json"));
        let got = viable_at(&gen, family, original);
        if got != want {
            return Err(format!("{name} `{original}`: {got:?}, expected {want:?}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= GOLDEN_SECONDS {
        return Err(format!("took {secs:.2} s"));
    }
    Ok(format!("5 sites exact, {secs:.2} s < {GOLDEN_SECONDS} s"))
}

fn invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mutants = 0;
    let mut sequences = 0;
    for case in 0..GENERATED_CASES {
        let (seed, pseed) = (rng.gen::<u64>(), rng.gen::<u64>());
        let src = program_text(seed, false);
        let program = compile_source(&src).map_err(|e| format!("generator: {e}"))?;
        let gen = generate(&program, &HashPredictor(pseed));
        for m in gen.viable() {
            let text = materialize(&program, m.site.span, &m.replacement);
            if compile_source(&text).is_err() {
                return Err(format!(
                    "case {case}: viable mutant {} does not compile",
                    m.id
                ));
            }
            mutants += 1;
        }

        // Every tenth case also exceeds the window.
        let long = if case % 10 == 0 {
            compile_source(&program_text(seed, true)).ok()
        } else {
            None
        };
        for p in std::iter::once(&program).chain(long.as_ref()) {
            for site in enumerate_sites(p) {
                let seq = render_masked(p, &site);
                if seq.mask_count() != 1 || seq.tokens.len() > 512 {
                    return Err(format!("case {case}: bad sequence {}", seq.text()));
                }
                sequences += 1;
            }
        }

        let records = gen.records(&program);
        let text = persist_store(&records);
        let loaded: Vec<MutantRecord> = load_store(&text).map_err(|e| format!("{e:?}"))?;
        if loaded != records || persist_store(&loaded) != text {
            return Err(format!("case {case}: store does not round-trip"));
        }

        let again = generate(&program, &HashPredictor(pseed));
        let same = serde_json::to_string(&gen.report).unwrap()
            == serde_json::to_string(&again.report).unwrap()
            && persist_store(&again.records(&program)) == text;
        if !same {
            return Err(format!("case {case}: identical seeds diverge"));
        }
    }
    Ok(format!(
        "{GENERATED_CASES} programs, {mutants} viable mutants, {sequences} sequences, 0 violations"
    ))
}

fn simulation_oracle() -> Check {
    let two = Problem::new(vec![vec![0], vec![1]], 2, vec![true, false]);
    let ex = exact(&two, Policy::Uniform).mean_effort;
    let sim = run_simulation(
        &two,
        &SimulationConfig {
            repetitions: 10_000,
            ..SimulationConfig::new(42)
        },
    );
    if ex != 2.0 || sim.mean_effort() != 2.0 {
        return Err(format!(
            "2x2 mean effort {} (exact {ex})",
            sim.mean_effort()
        ));
    }
    let mut problems = random_problems(7, 25);
    let p = program("calc/calc.minij");
    let gen = generate(
        &p,
        &FixturePredictor::load(&fixture("calc/calc.json")).unwrap(),
    );
    let matrix = build_kill_matrix(
        &p,
        &viable_programs(&gen),
        &tests("calc/calc.mjtest"),
        &ExecConfig::default(),
    )
    .map_err(|e| format!("{e:?}"))?;
    problems.push((
        Problem::from_matrix(&matrix, &[true, false]).0,
        Policy::Uniform,
    ));
    for (i, (problem, policy)) in problems.iter().enumerate() {
        compare(problem, *policy, i as u64)?;
    }
    Ok(format!(
        "2x2 effort exactly 2; {} projects x 10000 sessions, mean within {}%",
        problems.len(),
        MEAN_EFFORT_REL * 100.0
    ))
}

fn effort_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut sessions = 0;
    for case in 0..GENERATED_CASES {
        let tests = rng.gen_range(1..=6);
        let killers = (0..rng.gen_range(0..=12))
            .map(|_| (0..tests).filter(|_| rng.gen_bool(0.35)).collect())
            .collect();
        let triggers = (0..tests).map(|_| rng.gen_bool(0.3)).collect();
        let problem = Problem::new(killers, tests, triggers);
        let policy = if case % 2 == 0 {
            Policy::Uniform
        } else {
            Policy::MaxAdditionalKills
        };
        let config = SimulationConfig {
            repetitions: 20,
            policy,
            ..SimulationConfig::new(case)
        };
        for s in &run_simulation(&problem, &config).sessions {
            if s.effort != s.tests_selected + s.judged_equivalent {
                return Err(format!("case {case}: {s:?}"));
            }
            sessions += 1;
        }
    }
    Ok(format!("{sessions} sessions, 0 violations"))
}

fn assertion_filter() -> Check {
    let expect: [(&str, &[(&str, AssertionStatus)]); 2] = [
        (
            "angle",
            &[
                ("abs(res) <= 1", AssertionStatus::Kept),
                ("res == res", AssertionStatus::Discarded),
            ],
        ),
        (
            "composite",
            &[
                ("c.value == old(c.value)", AssertionStatus::Kept),
                ("children == old(children)", AssertionStatus::Kept),
            ],
        ),
    ];
    let mut checked = 0;
    for (name, want) in expect {
        let p = program(&format!("assertions/{name}.minij"));
        let text =
            std::fs::read_to_string(fixture(&format!("assertions/{name}.mjassert"))).unwrap();
        let specs = parse_assertions(&p, &text).map_err(|e| format!("{e:?}"))?;
        let gen = generate_with_fixture(&p, &format!("assertions/{name}.json"));
        let report = filter_assertions(
            &specs,
            &p,
            &viable_programs(&gen),
            &tests(&format!("assertions/{name}.mjtest")),
            &ExecConfig::with_budget(50_000),
        )
        .map_err(|e| format!("{e:?}"))?;
        for (assertion, status) in want {
            let got = report
                .verdicts
                .iter()
                .find(|v| v.assertion.ends_with(assertion))
                .map(|v| v.status);
            if got != Some(*status) {
                return Err(format!("{name}: `{assertion}` is {got:?}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} verdicts exact"))
}

fn fault_harness() -> Check {
    let mut detected = 0;
    let mut missed = Vec::new();
    for name in PAIRS {
        let o = harness(name);
        if o.detected {
            detected += 1;
        } else {
            missed.push(name);
        }
    }
    let line = format!(
        "{detected}/{} detected (need {FAULTS_REQUIRED}), missed {missed:?}",
        PAIRS.len()
    );
    if detected >= FAULTS_REQUIRED {
        Ok(line)
    } else {
        Err(line)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("worked-example golden suite", golden),
        ("pipeline invariants", invariants),
        ("simulation oracle equivalence", simulation_oracle),
        ("effort metric identity", effort_identity),
        ("assertion filter reproduction", assertion_filter),
        ("fault-detection harness", fault_harness),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
