//! Keeps the Angle assertions that some mutant violates.
//!
//! ```text
//! cargo run --example filter_assertions
//! ```

use std::path::Path;
use std::sync::Arc;

use mutamask::analysis::MutantProgram;
use mutamask::assertions::{filter_assertions, parse_assertions};
use mutamask::lang::{compile_source, parse_test_file, ExecConfig};
use mutamask::mutagen::generate;
use mutamask::predict::FixturePredictor;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/assertions");
    let read = |f: &str| std::fs::read_to_string(dir.join(f)).unwrap();
    let program = compile_source(&read("angle.minij")).unwrap();
    let tests = parse_test_file(&read("angle.mjtest")).unwrap();
    let specs = parse_assertions(&program, &read("angle.mjassert")).unwrap();
    let predictor = FixturePredictor::load(&dir.join("angle.json")).unwrap();

    let mutants: Vec<MutantProgram> = generate(&program, &predictor)
        .viable()
        .map(|m| MutantProgram {
            id: m.id,
            program: Arc::clone(m.program.as_ref().unwrap()),
        })
        .collect();
    let report = filter_assertions(
        &specs,
        &program,
        &mutants,
        &tests,
        &ExecConfig::with_budget(50_000),
    )
    .expect("tests compile");
    for v in &report.verdicts {
        println!(
            "{:<10} {} (killed by {:?})",
            format!("{:?}", v.status),
            v.assertion,
            v.mutants_killed
        );
    }
}
