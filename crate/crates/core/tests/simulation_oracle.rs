//! Session statistics against an exact enumeration of the session Markov
//! chain, and traces against a second, straight-line implementation.

mod common;

use common::chain::{exact, random_problems};
use common::{fixture, program, viable_programs};
use mutamask::analysis::{build_kill_matrix, detects_fault, FaultPair};
use mutamask::lang::ExecConfig;
use mutamask::predict::FixturePredictor;
use mutamask::simulate::{run_simulation, Action, Policy, Problem, SimulationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
fn check_against_chain(p: &Problem, policy: Policy, seed: u64) {
    common::chain::compare(p, policy, seed).unwrap();
}

#[test]
fn two_by_two_is_exactly_two() {
    let p = Problem::new(vec![vec![0], vec![1]], 2, vec![true, false]);
    let ex = exact(&p, Policy::Uniform);
    assert_eq!(ex.mean_effort, 2.0);
    let r = run_simulation(
        &p,
        &SimulationConfig {
            repetitions: 10_000,
            ..SimulationConfig::new(42)
        },
    );
    assert_eq!(r.mean_effort(), 2.0);
    assert!(r.sessions.iter().all(|s| s.effort == 2));
}

#[test]
fn hand_built_chains() {
    let cases = [
        // One test kills both mutants, the other only one.
        Problem::new(vec![vec![0, 1], vec![0]], 2, vec![false, true]),
        // An equivalent mutant among killable ones.
        Problem::new(vec![vec![0], vec![], vec![0, 1]], 2, vec![false, true]),
        // Nested kill sets.
        Problem::new(
            vec![vec![0, 1, 2], vec![1, 2], vec![2], vec![2, 3], vec![3]],
            4,
            vec![true, false, false, true],
        ),
        Problem::new(vec![vec![]; 6], 1, vec![true]),
    ];
    for (i, p) in cases.iter().enumerate() {
        check_against_chain(p, Policy::Uniform, 100 + i as u64);
        check_against_chain(p, Policy::MaxAdditionalKills, 200 + i as u64);
    }
}

#[test]
fn random_small_projects() {
    for (case, (p, policy)) in random_problems(7, 25).iter().enumerate() {
        check_against_chain(p, *policy, case as u64);
    }
}

/// The calc fixture's real 2x3 matrix through the pipeline.
#[test]
fn calc_project_matches_chain() {
    let p = program("calc/calc.minij");
    let predictor = FixturePredictor::load(&fixture("calc/calc.json")).unwrap();
    let gen = mutamask::mutagen::generate(&p, &predictor);
    let tests = common::tests("calc/calc.mjtest");
    let matrix =
        build_kill_matrix(&p, &viable_programs(&gen), &tests, &ExecConfig::default()).unwrap();
    let (problem, _) = Problem::from_matrix(&matrix, &[true, false]);
    check_against_chain(&problem, Policy::Uniform, 3);
}

fn leap_year() -> (FaultPair, Problem) {
    let pair = FaultPair::load(&fixture("faults/leap_year")).unwrap();
    let predictor = FixturePredictor::load(&fixture("golden/leap_year.json")).unwrap();
    let gen = mutamask::mutagen::generate(&pair.fixed, &predictor);
    let cfg = ExecConfig::default();
    let matrix = build_kill_matrix(&pair.fixed, &viable_programs(&gen), &pair.pool, &cfg).unwrap();
    let triggers: Vec<bool> = pair.pool.iter().map(|t| pair.triggers(t, &cfg)).collect();
    (pair, Problem::from_matrix(&matrix, &triggers).0)
}

#[test]
fn leap_year_pair_by_hand() {
    let (pair, problem) = leap_year();
    let cfg = ExecConfig::default();
    let names: Vec<&str> = pair.pool.iter().map(|t| t.name.as_str()).collect();
    assert_eq!(
        names,
        ["leap_2000", "leap_2024", "common_1900", "common_2023"]
    );
    // 2000 is still a leap year through `year % 400 == 0`.
    assert!(!detects_fault(&pair.pool[0..1], &pair, &cfg));
    assert!(detects_fault(&pair.pool[1..2], &pair, &cfg));
    assert!(!detects_fault(&[], &pair, &cfg));
    // Mutants `/`, `-`, `100`, `400`, `10` each fail 2024; `2` survives.
    assert_eq!(
        problem.killers,
        [vec![1], vec![1], vec![1], vec![1], vec![1], vec![]]
    );
    assert_eq!(problem.triggers, [false, true, false, false]);
}

/// Second implementation of the session loop, written out without the
/// library's helpers.
fn straight_line(
    problem: &Problem,
    seed: u64,
    reps: usize,
) -> Vec<(usize, Option<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    for i in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut live: Vec<usize> = (0..problem.killers.len()).collect();
        let mut effort = 0;
        let mut first = None;
        let mut suite = Vec::new();
        while !live.is_empty() {
            let m = live[rng.gen_range(0..live.len())];
            effort += 1;
            let ks = &problem.killers[m];
            if ks.is_empty() {
                live.retain(|&x| x != m);
                continue;
            }
            let t = ks[rng.gen_range(0..ks.len())];
            suite.push(t);
            if problem.triggers[t] && first.is_none() {
                first = Some(effort);
            }
            live.retain(|&x| !problem.killers[x].contains(&t));
        }
        out.push((effort, first, suite));
    }
    out
}

#[test]
fn leap_year_seed_42_matches_second_implementation() {
    let (_, problem) = leap_year();
    let r = run_simulation(&problem, &SimulationConfig::new(42));
    let oracle = straight_line(&problem, 42, 100);
    for (s, (effort, first, suite)) in r.sessions.iter().zip(&oracle) {
        assert_eq!(s.effort, *effort);
        assert_eq!(s.first_detection, *first);
        assert_eq!(&s.suite, suite);
        let selected = s
            .events
            .iter()
            .filter(|e| matches!(e.action, Action::TestSelected(_)))
            .count();
        assert_eq!(s.effort, selected + s.judged_equivalent);
    }
    let max = oracle.iter().map(|o| o.0).max().unwrap();
    assert_eq!(r.curve.len(), max);
    for x in 1..=max {
        let hits = oracle
            .iter()
            .filter(|o| o.1.is_some_and(|f| f <= x))
            .count();
        assert_eq!(r.curve[x - 1].effectiveness, hits as f64 / 100.0);
    }
    // Every session ends at effort 2 with the fault found.
    assert!(r.sessions.iter().all(|s| s.effort == 2 && s.fault_detected));
    assert_eq!(r.curve.last().unwrap().effectiveness, 1.0);
}
