mod support;

use partsim::checkers::{
    check_linearizable, check_sequential, witness_is_valid, CheckError, PropertyName,
};
use proptest::prelude::*;
use support::{brute_force, random_history, Order};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn linearizability_matches_brute_force(seed in any::<u64>()) {
        let h = random_history(seed, 7);
        let v = check_linearizable(&h).unwrap();
        prop_assert_eq!(v.satisfied, brute_force(&h, Order::RealTime));
        if let Some(w) = &v.witness {
            prop_assert!(witness_is_valid(&h, PropertyName::Linearizability, w));
        }
    }

    #[test]
    fn sequential_matches_brute_force(seed in any::<u64>()) {
        let h = random_history(seed, 7);
        let v = check_sequential(&h).unwrap();
        prop_assert_eq!(v.satisfied, brute_force(&h, Order::Program));
        if let Some(w) = &v.witness {
            prop_assert!(witness_is_valid(&h, PropertyName::Sequential, w));
        }
    }

    #[test]
    fn linearizable_implies_sequential(seed in any::<u64>()) {
        let h = random_history(seed, 10);
        if check_linearizable(&h).unwrap().satisfied {
            prop_assert!(check_sequential(&h).unwrap().satisfied);
        }
    }

    #[test]
    fn violations_name_real_operations(seed in any::<u64>()) {
        let h = random_history(seed, 7);
        let v = check_linearizable(&h).unwrap();
        if let Some(c) = v.counterexample {
            prop_assert!(!c.ops.is_empty() || h.ops().is_empty());
            for id in c.ops {
                prop_assert!(h.op(id).is_some());
            }
        }
    }
}

#[test]
fn both_outcomes_are_generated() {
    let verdicts: Vec<bool> = (0..200)
        .map(|s| check_linearizable(&random_history(s, 7)).unwrap().satisfied)
        .collect();
    let ok = verdicts.iter().filter(|v| **v).count();
    assert!(ok > 40 && ok < 160, "{ok} of 200 linearizable");
}

#[test]
fn history_roundtrip_preserves_verdict() {
    for seed in 0..50 {
        let h = random_history(seed, 7);
        let back = partsim::histories::History::from_ndjson(&h.to_ndjson()).unwrap();
        assert_eq!(back, h);
        assert_eq!(
            check_linearizable(&back).unwrap().satisfied,
            check_linearizable(&h).unwrap().satisfied
        );
    }
}

#[test]
fn larger_bound_is_explicit() {
    let h = random_history(3, 7);
    if h.ops().len() > 2 {
        assert!(matches!(
            partsim::checkers::check_linearizable_bounded(&h, 2),
            Err(CheckError::TooLarge { .. })
        ));
    }
}
