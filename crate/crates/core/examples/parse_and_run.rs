//! Compiles a program, runs a test against it and against a hand-made
//! mutant.
//!
//! ```text
//! cargo run --example parse_and_run
//! ```

use mutamask::lang::{compile_source, parse_test_file, pretty_print, run_test, ExecConfig};

const SOURCE: &str = "class Calc { int add(int a, int b) { return a + b; } }";
const TESTS: &str = "test adds { Calc c = new Calc(); assert c.add(2, 3) == 5; }";

fn main() {
    let program = compile_source(SOURCE).expect("valid program");
    let tests = parse_test_file(TESTS).expect("valid tests");
    print!("{}", pretty_print(program.program()));

    let config = ExecConfig::default();
    let out = run_test(&program, &tests[0], &config);
    println!("original: {} in {} steps", out.verdict, out.steps);

    let mutant = compile_source(&SOURCE.replace("a + b", "a - b")).unwrap();
    let out = run_test(&mutant, &tests[0], &config);
    println!("a - b:    {} in {} steps", out.verdict, out.steps);
}
