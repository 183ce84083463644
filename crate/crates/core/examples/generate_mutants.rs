//! Generates mutants for a program from recorded predictions and prints
//! each with its status.
//!
//! ```text
//! cargo run --example generate_mutants [PROGRAM FIXTURES]
//! ```

use std::path::PathBuf;

use mutamask::lang::compile_source;
use mutamask::mutagen::generate;
use mutamask::predict::FixturePredictor;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden");
    let (program, fixtures) = match args.as_slice() {
        [p, f] => (PathBuf::from(p), PathBuf::from(f)),
        _ => (
            golden.join("leap_year.minij"),
            golden.join("leap_year.json"),
        ),
    };
    let source = std::fs::read_to_string(&program).expect("readable program");
    let program = compile_source(&source).expect("valid program");
    let predictor = FixturePredictor::load(&fixtures).expect("readable fixtures");

    let gen = generate(&program, &predictor);
    for m in &gen.mutants {
        println!(
            "{:>3} {:<18} {:>6} -> {:<6} {:?}",
            m.id,
            m.site.family.tag(),
            m.site.original,
            m.replacement,
            m.status
        );
    }
    println!("{}", serde_json::to_string_pretty(&gen.report).unwrap());
}
