mod support;

use partsim::checkers::{
    check_causal, check_eventual, check_linearizable, check_sequential, PropertyName,
};
use partsim::experiments::run;
use partsim::histories::{is_loss_free, OpKind, OpOutput};
use partsim::registers::Algorithm;
use partsim::scenario::{build_sim, ScenarioSpec};
use partsim::simnet::DelayModel;
use support::random_scenario;

fn shipped(name: &str) -> ScenarioSpec {
    let path = format!("{}/scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"));
    partsim::scenario::validate_scenario(path).unwrap()
}

#[test]
fn abd_linearizable_on_random_schedules() {
    for seed in 0..60 {
        for faults in [false, true] {
            let spec = random_scenario(Algorithm::Abd, seed, 8, faults);
            let h = run(&spec).unwrap();
            assert!(is_loss_free(&h).unwrap());
            let v = check_linearizable(&h).unwrap();
            assert!(
                v.satisfied,
                "seed {seed} faults {faults}: {:?}",
                v.counterexample
            );
        }
    }
}

#[test]
fn leader_registers_sequential_on_random_schedules() {
    for alg in [Algorithm::LeaderFastRead, Algorithm::LeaderFastWrite] {
        for seed in 0..60 {
            let h = run(&random_scenario(alg, seed, 8, seed % 2 == 0)).unwrap();
            let v = check_sequential(&h).unwrap();
            assert!(v.satisfied, "{alg} seed {seed}: {:?}", v.counterexample);
        }
    }
}

#[test]
fn set_registers_on_random_schedules() {
    for seed in 0..60 {
        for faults in [false, true] {
            let spec = random_scenario(Algorithm::Causal, seed, 8, faults).probes(true);
            let h = run(&spec).unwrap();
            assert!(check_causal(&h).unwrap().satisfied, "causal seed {seed}");
            assert!(check_eventual(&h).unwrap().satisfied, "causal seed {seed}");

            let spec = random_scenario(Algorithm::Eventual, seed, 8, faults).probes(true);
            let h = run(&spec).unwrap();
            assert!(
                check_eventual(&h).unwrap().satisfied,
                "eventual seed {seed}"
            );
        }
    }
}

#[test]
fn leader_fast_read_can_be_stale() {
    let h = run(&shipped("leader_stale_read")).unwrap();
    let read = h.ops().iter().find(|o| o.kind == OpKind::Read).unwrap();
    // the write finished at its site long before the read, yet the remote
    // replica has not heard of it
    let write = h.ops().iter().find(|o| o.kind == OpKind::Write).unwrap();
    assert_eq!(write.response_time.unwrap().0, 2);
    assert_eq!(read.read_payload(), Some(0));
    assert!(check_sequential(&h).unwrap().satisfied);
    assert!(!check_linearizable(&h).unwrap().satisfied);
}

#[test]
fn abd_basic_trace() {
    let h = run(&shipped("abd_basic")).unwrap();
    assert!(check_linearizable(&h).unwrap().satisfied);
    for o in h.ops() {
        assert_eq!(o.latency(), Some(40), "op {}", o.op_id);
    }
}

#[test]
fn causal_under_drops() {
    let h = run(&shipped("causal_concurrent")).unwrap();
    assert!(check_causal(&h).unwrap().satisfied);
    assert!(check_eventual(&h).unwrap().satisfied);
    // concurrent writes 1 and 2 both survive
    let probe = h.ops().iter().find(|o| o.probe).unwrap();
    assert_eq!(
        probe.read_set().unwrap().into_iter().collect::<Vec<_>>(),
        [1, 2, 3]
    );
}

#[test]
fn set_valued_reads_rejected_by_register_checkers() {
    let h = run(&shipped("causal_concurrent")).unwrap();
    for p in [PropertyName::Linearizability, PropertyName::Sequential] {
        assert!(partsim::checkers::check(p, &h).is_err());
    }
}

#[test]
fn local_fallback_is_linearizable_without_faults() {
    let spec = ScenarioSpec::new(Algorithm::LocalFallback, 3, DelayModel::fixed(10))
        .write(0, 0, 1)
        .read(50, 1)
        .write(60, 2, 2)
        .read(200, 0);
    let h = run(&spec).unwrap();
    assert!(check_linearizable(&h).unwrap().satisfied);
    assert!(h.ops().iter().all(|o| o.latency() == Some(20)));
}

#[test]
fn backlog_preserves_request_time() {
    // the second request arrives while the first is still running
    let spec = ScenarioSpec::new(Algorithm::Abd, 3, DelayModel::fixed(10))
        .write(0, 0, 1)
        .read(10, 0);
    let mut sim = build_sim(&spec).unwrap();
    let h = sim.run_to_quiescence().unwrap();
    let read = &h.ops()[1];
    assert_eq!((read.requested_time.0, read.invoke_time.0), (10, 40));
    assert_eq!(read.response_time.unwrap().0, 80);
    assert!(matches!(read.value_out, Some(OpOutput::Value(v)) if v.payload == 1));
}
