//! Simulated tester sessions on a small hand-written kill relation.
//!
//! ```text
//! cargo run --example simulate_tester [SEED]
//! ```

use mutamask::simulate::{run_simulation, Policy, Problem, SimulationConfig};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .map_or(42, |s| s.parse().expect("integer seed"));
    // Four mutants over three tests; mutant 3 is equivalent and test 2
    // reveals the fault.
    let problem = Problem::new(
        vec![vec![0, 1], vec![1], vec![2], vec![]],
        3,
        vec![false, false, true],
    );
    for policy in [Policy::Uniform, Policy::MaxAdditionalKills] {
        let config = SimulationConfig {
            repetitions: 1000,
            policy,
            ..SimulationConfig::new(seed)
        };
        let r = run_simulation(&problem, &config);
        println!(
            "{policy:?}: mean effort {:.3}, detection rate {:.3}",
            r.mean_effort(),
            r.detection_rate()
        );
        print!("{}", r.curve_csv());
    }
}
