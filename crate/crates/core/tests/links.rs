mod support;

use partsim::experiments::run;
use partsim::registers::Algorithm;
use proptest::prelude::*;
use support::{faulty_scenario, random_scenario, simulate};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn no_duplication_or_creation(seed in any::<u64>()) {
        let h = simulate(&faulty_scenario(seed));
        prop_assert_eq!(h.link_violations(), Vec::<String>::new());
    }

    #[test]
    fn reruns_are_byte_identical(seed in any::<u64>()) {
        let spec = faulty_scenario(seed);
        prop_assert_eq!(simulate(&spec).to_ndjson(), simulate(&spec).to_ndjson());
    }

    #[test]
    fn transient_faults_lose_nothing(seed in any::<u64>()) {
        let spec = random_scenario(Algorithm::Eventual, seed, 8, true);
        let h = run(&spec).unwrap();
        prop_assert!(partsim::histories::is_loss_free(&h).unwrap());
    }
}

#[test]
fn partition_delays_then_delivers() {
    let path = format!(
        "{}/scenarios/partition_retry.json",
        env!("CARGO_MANIFEST_DIR")
    );
    let spec = partsim::scenario::validate_scenario(path).unwrap();
    let h = run(&spec).unwrap();
    assert_eq!(h.sends().len(), 1);
    assert_eq!(h.deliveries()[0].time.0, 220);
    assert!(partsim::histories::is_loss_free(&h).unwrap());
}

#[test]
fn different_seeds_differ_under_random_delay() {
    let a = simulate(&faulty_scenario(1).seed(1));
    let b = simulate(&faulty_scenario(1).seed(2));
    assert_ne!(a.to_ndjson(), b.to_ndjson());
}
