//! Mutant-adequate suites against seeded faults.

use std::sync::Arc;

use super::fixture;
use mutamask::analysis::{
    build_kill_matrix, detects_fault, minimal_killing_suite, FaultPair, MutantProgram,
};
use mutamask::lang::ExecConfig;
use mutamask::mutagen::generate;
use mutamask::predict::{NgramModel, NgramPredictor};
use mutamask::simulate::{run_simulation, Problem, SimulationConfig};

pub const PAIRS: [&str; 5] = [
    "operator_swap",
    "method_name_swap",
    "constant_return",
    "empty_string_init",
    "recursion",
];

pub struct Outcome {
    pub viable: usize,
    pub killed: usize,
    pub suite: Vec<String>,
    /// Greedy minimal suite.
    pub detected: bool,
    /// Fraction of simulated tester sessions whose suite reveals the fault.
    pub rate: f64,
}

pub fn harness(name: &str) -> Outcome {
    let pair = FaultPair::load(&fixture(&format!("faults/{name}"))).unwrap();
    let model = NgramModel::train_path(&fixture("corpus"), 3).unwrap();
    let gen = generate(&pair.fixed, &NgramPredictor::new(model));
    let mutants: Vec<MutantProgram> = gen
        .viable()
        .map(|m| MutantProgram {
            id: m.id,
            program: Arc::clone(m.program.as_ref().unwrap()),
        })
        .collect();
    let cfg = ExecConfig::with_budget(100_000);
    let matrix = build_kill_matrix(&pair.fixed, &mutants, &pair.pool, &cfg).unwrap();
    assert!(
        matrix.excluded_tests().is_empty(),
        "{name}: pool must pass on the fixed version"
    );
    let suite_idx = minimal_killing_suite(&matrix);
    let suite: Vec<_> = suite_idx.iter().map(|&t| pair.pool[t].clone()).collect();
    let triggers: Vec<bool> = pair.pool.iter().map(|t| pair.triggers(t, &cfg)).collect();
    let (problem, _) = Problem::from_matrix(&matrix, &triggers);
    let rate = run_simulation(&problem, &SimulationConfig::new(42)).detection_rate();
    Outcome {
        rate,
        viable: mutants.len(),
        killed: (0..mutants.len()).filter(|&m| matrix.is_killed(m)).count(),
        suite: suite.iter().map(|t| t.name.clone()).collect(),
        detected: detects_fault(&suite, &pair, &cfg),
    }
}
