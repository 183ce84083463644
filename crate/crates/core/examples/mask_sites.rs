//! Lists every mask site of a program with the sequence sent to the model.
//!
//! ```text
//! cargo run --example mask_sites [PROGRAM]
//! ```

use mutamask::lang::compile_source;
use mutamask::masking::{enumerate_sites, render_masked};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/golden/leap_year.minij"
        )
        .to_string()
    });
    let source = std::fs::read_to_string(&path).expect("readable program");
    let program = compile_source(&source).unwrap_or_else(|e| panic!("{path}: {e}"));
    for site in enumerate_sites(&program) {
        let seq = render_masked(&program, &site);
        println!(
            "{:<18} {:<8} {}",
            site.family.tag(),
            site.original,
            seq.text()
        );
    }
}
