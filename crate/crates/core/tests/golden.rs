mod common;

use std::time::Instant;

use common::{generate_with_fixture, program, viable_at};
use mutamask::masking::OperatorFamily;
use mutamask::mutagen::MutantStatus;

#[test]
fn leap_year_binary_operator() {
    let p = program("golden/leap_year.minij");
    let gen = generate_with_fixture(&p, "golden/leap_year.json");
    assert_eq!(viable_at(&gen, OperatorFamily::BinaryOp, "%"), ["/", "-"]);
    let statuses: Vec<_> = gen
        .mutants
        .iter()
        .filter(|m| m.site.family == OperatorFamily::BinaryOp)
        .map(|m| m.status)
        .collect();
    assert_eq!(
        statuses,
        [
            MutantStatus::IdenticalDiscarded,
            MutantStatus::Viable,
            MutantStatus::IdenticalDiscarded,
            MutantStatus::Viable,
            MutantStatus::DuplicateDiscarded,
        ]
    );
}

#[test]
fn leap_year_literal() {
    let p = program("golden/leap_year.minij");
    let gen = generate_with_fixture(&p, "golden/leap_year.json");
    assert_eq!(
        viable_at(&gen, OperatorFamily::Literal, "4"),
        ["100", "400", "10", "2"]
    );
}

#[test]
fn print_array_unary_operator() {
    let p = program("golden/print_array.minij");
    let gen = generate_with_fixture(&p, "golden/print_array.json");
    assert_eq!(viable_at(&gen, OperatorFamily::UnaryOp, "--"), ["++"]);
    let bang = gen.mutants.iter().find(|m| m.replacement == "!").unwrap();
    assert_eq!(bang.status, MutantStatus::NonCompilingDiscarded);
}

#[test]
fn composite_method_name() {
    let p = program("golden/composite.minij");
    let gen = generate_with_fixture(&p, "golden/composite.json");
    assert_eq!(
        viable_at(&gen, OperatorFamily::MethodName, "add"),
        ["push", "remove"]
    );
}

#[test]
fn binary_search_array_index() {
    let p = program("golden/binary_search.minij");
    let gen = generate_with_fixture(&p, "golden/binary_search.json");
    assert_eq!(
        viable_at(&gen, OperatorFamily::ArrayIndex, "mid - 1"),
        ["0", "n", "mid", "1", "low"]
    );
}

#[test]
fn worked_examples_run_quickly() {
    let start = Instant::now();
    for (src, fx) in [
        ("golden/leap_year.minij", "golden/leap_year.json"),
        ("golden/print_array.minij", "golden/print_array.json"),
        ("golden/composite.minij", "golden/composite.json"),
        ("golden/binary_search.minij", "golden/binary_search.json"),
    ] {
        generate_with_fixture(&program(src), fx);
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

fn raw_predictions(name: &str, family: OperatorFamily, original: &str) -> Vec<String> {
    use mutamask::masking::{enumerate_sites, render_masked};
    use mutamask::predict::{FixturePredictor, Predictor};
    let p = program(&format!("golden/{name}.minij"));
    let predictor =
        FixturePredictor::load(&common::fixture(&format!("golden/{name}.json"))).unwrap();
    let site = enumerate_sites(&p)
        .into_iter()
        .find(|s| s.family == family && s.original == original)
        .unwrap();
    let preds = predictor.predict(&render_masked(&p, &site)).unwrap();
    assert_eq!(
        preds.iter().map(|p| p.rank).collect::<Vec<_>>(),
        [1, 2, 3, 4, 5]
    );
    preds.into_iter().map(|p| p.token).collect()
}

#[test]
fn fixture_lists_keep_whitespace() {
    assert_eq!(
        raw_predictions("leap_year", OperatorFamily::BinaryOp, "%"),
        [" %", "/", "%", "-", " /"]
    );
    assert_eq!(
        raw_predictions("print_array", OperatorFamily::UnaryOp, "--"),
        ["++", "--", " --", " ++", "!"]
    );
}
