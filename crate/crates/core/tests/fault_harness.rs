mod common;

use common::faults::{harness, PAIRS};
use common::fixture;
use mutamask::analysis::FaultPair;
use mutamask::lang::ExecConfig;

#[test]
fn every_pair_has_a_triggering_test() {
    let cfg = ExecConfig::default();
    for name in PAIRS {
        let pair = FaultPair::load(&fixture(&format!("faults/{name}"))).unwrap();
        assert!(pair.pool.iter().any(|t| pair.triggers(t, &cfg)), "{name}");
        assert!(!pair.pool.iter().all(|t| pair.triggers(t, &cfg)), "{name}");
    }
}

#[test]
fn mutant_adequate_suites_detect_most_faults() {
    let mut greedy = 0;
    let mut simulated = 0;
    for name in PAIRS {
        let o = harness(name);
        eprintln!(
            "{name}: {} viable, {} killed, suite {:?}, detected {}, session detection rate {}",
            o.viable, o.killed, o.suite, o.detected, o.rate
        );
        greedy += o.detected as usize;
        simulated += (o.rate >= 0.5) as usize;
    }
    assert!(greedy >= 4, "greedy suites detect {greedy} of 5");
    assert!(simulated >= 4, "sessions detect {simulated} of 5");
}

#[test]
fn constant_return_is_the_miss() {
    // `count >= max` only yields `<` and `==`; `==` is equivalent while
    // count never exceeds max, and `<` is killed by a test that expects false.
    let o = harness("constant_return");
    assert!(!o.detected);
    assert!(o.rate < 0.5);
}
