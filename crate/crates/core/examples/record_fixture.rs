//! Records predictions for one mask site into a fixture file.
//!
//! ```text
//! cargo run --example record_fixture -- PROGRAM FIXTURES FAMILY ORIGINAL[#N] TOKEN...
//! ```
//!
//! `FAMILY` is an operator family tag such as `binary-op`, `ORIGINAL` the
//! masked text of the site and `#N` picks the N-th such site (1-based).
//! Tokens are recorded verbatim, leading spaces included.

use std::path::Path;
use std::process::exit;

use mutamask::lang::compile_source;
use mutamask::masking::{enumerate_sites, render_masked, OperatorFamily};
use mutamask::predict::{FixtureFile, FixtureToken};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 4 {
        eprintln!("usage: record_fixture PROGRAM FIXTURES FAMILY ORIGINAL[#N] TOKEN...");
        exit(2);
    }
    let source = std::fs::read_to_string(&args[0]).unwrap_or_else(|e| {
        eprintln!("{}: {e}", args[0]);
        exit(2)
    });
    let program = compile_source(&source).unwrap_or_else(|e| {
        eprintln!("{}: {e}", args[0]);
        exit(2)
    });
    let family = OperatorFamily::from_tag(&args[2]).unwrap_or_else(|| {
        eprintln!("unknown family `{}`", args[2]);
        exit(2)
    });
    let (original, nth) = match args[3].rsplit_once('#') {
        Some((o, n)) => (o, n.parse::<usize>().expect("site number")),
        None => (args[3].as_str(), 1),
    };

    let site = enumerate_sites(&program)
        .into_iter()
        .filter(|s| s.family == family && s.original == original)
        .nth(nth - 1)
        .unwrap_or_else(|| {
            eprintln!("no site #{nth} `{original}` of family {family}");
            exit(2)
        });
    let sequence = render_masked(&program, &site).text();

    let path = Path::new(&args[1]);
    let mut file = if path.exists() {
        FixtureFile::read(path).expect("readable fixture file")
    } else {
        FixtureFile::default()
    };
    file.record(
        &sequence,
        args[4..].iter().cloned().map(FixtureToken::Bare).collect(),
    );
    file.write(path).expect("writable fixture file");
    println!("{sequence}");
}
