//! Trains the n-gram backend on the bundled corpus and predicts the
//! leap-year `%` site.
//!
//! ```text
//! cargo run --example ngram_predict
//! ```

use std::path::Path;

use mutamask::lang::compile_source;
use mutamask::masking::{enumerate_sites, render_masked, OperatorFamily};
use mutamask::predict::{NgramModel, NgramPredictor, Predictor};

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let model = NgramModel::train_path(&root.join("corpus"), 3).expect("corpus trains");
    let predictor = NgramPredictor::new(model);

    let source = std::fs::read_to_string(root.join("golden/leap_year.minij")).unwrap();
    let program = compile_source(&source).unwrap();
    let site = enumerate_sites(&program)
        .into_iter()
        .find(|s| s.family == OperatorFamily::BinaryOp && s.original == "%")
        .unwrap();
    let seq = render_masked(&program, &site);
    println!("{}", seq.text());
    for p in predictor.predict(&seq).expect("ngram never fails") {
        println!("  {} {:?} {:.3}", p.rank, p.token, p.score);
    }
}
