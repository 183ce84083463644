mod common;

use std::sync::Arc;

use common::{fixture, generate_with_fixture, program, tests};
use mutamask::analysis::MutantProgram;
use mutamask::assertions::{
    evaluate_assertion, filter_assertions, parse_assertions, AssertionStatus, FilterReport,
    ViolationKind,
};
use mutamask::lang::{CheckedProgram, ExecConfig};

/// Ten times the largest step count of the original suites.
const BUDGET: u64 = 50_000;

fn mutants_of(p: &CheckedProgram, predictions: &str) -> Vec<MutantProgram> {
    generate_with_fixture(p, predictions)
        .viable()
        .map(|m| MutantProgram {
            id: m.id,
            program: Arc::clone(m.program.as_ref().unwrap()),
        })
        .collect()
}

fn run(name: &str) -> (FilterReport, Vec<MutantProgram>) {
    let p = program(&format!("assertions/{name}.minij"));
    let ts = tests(&format!("assertions/{name}.mjtest"));
    let text = std::fs::read_to_string(fixture(&format!("assertions/{name}.mjassert"))).unwrap();
    let specs = parse_assertions(&p, &text).unwrap();
    let ms = mutants_of(&p, &format!("assertions/{name}.json"));
    let report = filter_assertions(&specs, &p, &ms, &ts, &ExecConfig::with_budget(BUDGET)).unwrap();
    (report, ms)
}

fn status(report: &FilterReport, assertion: &str) -> AssertionStatus {
    report
        .verdicts
        .iter()
        .find(|v| v.assertion.ends_with(assertion))
        .unwrap_or_else(|| panic!("no verdict for {assertion}: {report:#?}"))
        .status
}

#[test]
fn angle_turn_is_bounded() {
    let (report, ms) = run("angle");
    assert_eq!(ms.len(), 3);
    assert!(report.rejected.is_empty(), "{:?}", report.rejected);
    assert_eq!(status(&report, "abs(res) <= 1"), AssertionStatus::Kept);
    assert_eq!(status(&report, "res == res"), AssertionStatus::Discarded);
    let bounded = &report.verdicts[0];
    assert_eq!(bounded.mutants_killed.len(), 3);
    assert_eq!(bounded.mutants_evaluated, 3);
}

#[test]
fn composite_add_child() {
    let (report, _) = run("composite");
    assert!(report.rejected.is_empty(), "{:?}", report.rejected);
    assert_eq!(
        status(&report, "c.value == old(c.value)"),
        AssertionStatus::Kept
    );
    assert_eq!(
        status(&report, "children == old(children)"),
        AssertionStatus::Kept
    );
}

#[test]
fn verdicts_are_consistent_with_kill_sets() {
    for name in ["angle", "composite"] {
        let (report, _) = run(name);
        for v in &report.verdicts {
            assert_eq!(
                v.status == AssertionStatus::Discarded,
                v.mutants_killed.is_empty()
            );
        }
    }
}

#[test]
fn kept_assertions_are_violated_by_their_killers() {
    let p = program("assertions/composite.minij");
    let ts = tests("assertions/composite.mjtest");
    let text = std::fs::read_to_string(fixture("assertions/composite.mjassert")).unwrap();
    let specs = parse_assertions(&p, &text).unwrap();
    let ms = mutants_of(&p, "assertions/composite.json");
    let report = filter_assertions(&specs, &p, &ms, &ts, &ExecConfig::with_budget(BUDGET)).unwrap();
    for v in &report.verdicts {
        let spec = specs.iter().find(|s| s.to_string() == v.assertion).unwrap();
        for id in &v.mutants_killed {
            let m = ms.iter().find(|m| m.id == *id).unwrap();
            let e = evaluate_assertion(spec, &m.program, &ts, &ExecConfig::with_budget(BUDGET))
                .unwrap();
            assert!(!e.holds, "{} on mutant {id}", v.assertion);
        }
    }
}

#[test]
fn enlarging_the_mutant_set_keeps_kept_assertions() {
    let p = program("assertions/composite.minij");
    let ts = tests("assertions/composite.mjtest");
    let text = std::fs::read_to_string(fixture("assertions/composite.mjassert")).unwrap();
    let specs = parse_assertions(&p, &text).unwrap();
    let all = mutants_of(&p, "assertions/composite.json");
    let cfg = ExecConfig::with_budget(BUDGET);
    let full = filter_assertions(&specs, &p, &all, &ts, &cfg).unwrap();
    for k in 0..=all.len() {
        let part = filter_assertions(&specs, &p, &all[..k], &ts, &cfg).unwrap();
        for (a, b) in part.verdicts.iter().zip(&full.verdicts) {
            if a.status == AssertionStatus::Kept {
                assert_eq!(b.status, AssertionStatus::Kept);
            }
        }
    }
}

#[test]
fn update_mutant_overwrites_child_value() {
    let p = program("assertions/composite.minij");
    let ts = tests("assertions/composite.mjtest");
    let specs = parse_assertions(&p, "Composite.addChild :: c.value == old(c.value)").unwrap();
    let gen = generate_with_fixture(&p, "assertions/composite.json");
    let update = gen.viable().find(|m| m.replacement == "update").unwrap();
    let e = evaluate_assertion(
        &specs[0],
        update.program.as_ref().unwrap(),
        &ts,
        &ExecConfig::with_budget(BUDGET),
    )
    .unwrap();
    assert_eq!(e.counterexample.unwrap().kind, ViolationKind::False);
}

#[test]
fn budget_covers_original_suites() {
    use mutamask::lang::Executable;
    for name in ["angle", "composite"] {
        let p = program(&format!("assertions/{name}.minij"));
        let ts = tests(&format!("assertions/{name}.mjtest"));
        let exe = Executable::new(&p, &ts, true).unwrap();
        for t in 0..exe.test_count() {
            let out = exe.run(t, &ExecConfig::default(), None);
            assert!(out.verdict.is_pass(), "{name}/{t}: {:?}", out.verdict);
            assert!(out.steps * 10 <= BUDGET, "{name}/{t}: {} steps", out.steps);
        }
    }
}
