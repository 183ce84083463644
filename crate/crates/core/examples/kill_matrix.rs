//! Kill matrix, mutation score and a minimal killing suite for the calc
//! fixture.
//!
//! ```text
//! cargo run --example kill_matrix
//! ```

use std::path::Path;
use std::sync::Arc;

use mutamask::analysis::{build_kill_matrix, minimal_killing_suite, score_report, MutantProgram};
use mutamask::lang::{compile_source, parse_test_file, ExecConfig};
use mutamask::mutagen::generate;
use mutamask::predict::FixturePredictor;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/calc");
    let program =
        compile_source(&std::fs::read_to_string(dir.join("calc.minij")).unwrap()).unwrap();
    let tests =
        parse_test_file(&std::fs::read_to_string(dir.join("calc.mjtest")).unwrap()).unwrap();
    let predictor = FixturePredictor::load(&dir.join("calc.json")).unwrap();

    let mutants: Vec<MutantProgram> = generate(&program, &predictor)
        .viable()
        .map(|m| MutantProgram {
            id: m.id,
            program: Arc::clone(m.program.as_ref().unwrap()),
        })
        .collect();
    let matrix = build_kill_matrix(&program, &mutants, &tests, &ExecConfig::default()).unwrap();
    print!("{}", matrix.to_csv());
    println!("{}", serde_json::to_string(&score_report(&matrix)).unwrap());
    let suite: Vec<&str> = minimal_killing_suite(&matrix)
        .into_iter()
        .map(|t| tests[t].name.as_str())
        .collect();
    println!("minimal suite: {suite:?}");
}
