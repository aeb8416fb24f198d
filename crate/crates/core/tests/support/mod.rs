//! Shared helpers for integration tests: a brute-force register oracle, and
//! generators for random histories and random scenarios.

#![allow(dead_code)]

use partsim::histories::{History, HistoryBuilder, OpKind, OpRecord};
use partsim::registers::Algorithm;
use partsim::scenario::{build_sim, ScenarioSpec};
use partsim::simnet::{DelayModel, FaultEnd, FaultSpec, NonTerminating, VirtualTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Order {
    RealTime,
    Program,
}

fn must_precede(a: &OpRecord, b: &OpRecord, order: Order) -> bool {
    match order {
        Order::RealTime => a.response_time.is_some_and(|r| r < b.invoke_time),
        Order::Program => a.process == b.process && a.invoke_time < b.invoke_time,
    }
}

fn legal(perm: &[&OpRecord], order: Order) -> bool {
    for (i, a) in perm.iter().enumerate() {
        for b in &perm[..i] {
            if must_precede(a, b, order) {
                return false;
            }
        }
    }
    let mut value = 0;
    for op in perm {
        match op.kind {
            OpKind::Write => value = op.value_in.unwrap(),
            OpKind::Read => {
                if op.read_payload() != Some(value) {
                    return false;
                }
            }
        }
    }
    true
}

fn permutations(ops: &mut Vec<&OpRecord>, k: usize, order: Order) -> bool {
    if k == ops.len() {
        return legal(ops, order);
    }
    for i in k..ops.len() {
        ops.swap(k, i);
        if permutations(ops, k + 1, order) {
            return true;
        }
        ops.swap(k, i);
    }
    false
}

/// Tries every subset of the pending writes and every ordering of the
/// operations. Pending reads are dropped: they returned nothing.
pub fn brute_force(h: &History, order: Order) -> bool {
    let complete: Vec<&OpRecord> = h.ops().iter().filter(|o| o.is_complete()).collect();
    let pending: Vec<&OpRecord> = h
        .ops()
        .iter()
        .filter(|o| !o.is_complete() && o.kind == OpKind::Write)
        .collect();
    for mask in 0u32..(1 << pending.len()) {
        let mut ops = complete.clone();
        ops.extend(
            pending
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, o)| *o),
        );
        if permutations(&mut ops, 0, order) {
            return true;
        }
    }
    false
}

/// A random single-value register history of at most `max_ops` operations
/// on up to three processes. Reads return the initial value or something
/// that is written somewhere in the history, so both outcomes are common.
pub fn random_history(seed: u64, max_ops: usize) -> History {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let ops = rng.gen_range(1..=max_ops);
    let writes = rng.gen_range(0..=ops);
    let mut kinds: Vec<bool> = (0..ops).map(|i| i < writes).collect();
    kinds.shuffle(&mut rng);

    let mut b = HistoryBuilder::new(n);
    let mut free = vec![0u64; n];
    let mut last: Vec<Option<usize>> = vec![None; n];
    let mut planned = Vec::new();
    let mut payload = 0;
    for is_write in kinds {
        let p = rng.gen_range(0..n);
        let invoke = free[p] + rng.gen_range(0..8);
        let response = invoke + rng.gen_range(0..12);
        free[p] = response + 1;
        let value = if is_write {
            payload += 1;
            payload
        } else {
            rng.gen_range(0..=writes as i64)
        };
        last[p] = Some(planned.len());
        planned.push((p, is_write, value, invoke, response));
    }
    for (i, (p, is_write, value, invoke, response)) in planned.into_iter().enumerate() {
        let pending = last[p] == Some(i) && rng.gen_bool(0.15);
        match (is_write, pending) {
            (true, false) => b.write(p, value, invoke, response),
            (true, true) => b.write_pending(p, value, invoke),
            (false, false) => b.read(p, value, invoke, response),
            (false, true) => b.read_pending(p, invoke),
        };
    }
    b.build()
}

/// A fault-free (or transiently faulty, when `faults` is set) scenario with
/// at most `max_ops` operations spread over three processes.
pub fn random_scenario(
    algorithm: Algorithm,
    seed: u64,
    max_ops: usize,
    faults: bool,
) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let d = rng.gen_range(1..=30);
    let u = rng.gen_range(0..=d);
    let mut spec = ScenarioSpec::new(algorithm, 3, DelayModel::uniform(d, u))
        .seed(seed)
        .horizon(1_000_000);
    let ops = rng.gen_range(1..=max_ops);
    for i in 0..ops {
        let t = rng.gen_range(0..(8 * d));
        let p = rng.gen_range(0..3);
        spec = if rng.gen_bool(0.5) {
            spec.write(t, p, i as i64 + 1)
        } else {
            spec.read(t, p)
        };
    }
    if faults {
        for _ in 0..rng.gen_range(1..=2) {
            spec = spec.fault(random_transient_fault(&mut rng, 3, d));
        }
    }
    spec
}

/// A fault that ends and keeps retransmitting, so it delays messages but
/// never loses them.
pub fn random_transient_fault(rng: &mut ChaCha8Rng, n: usize, d: u64) -> FaultSpec {
    let start = rng.gen_range(0..(10 * d));
    let end = FaultEnd::At(VirtualTime(start + rng.gen_range(1..(20 * d))));
    match rng.gen_range(0..3) {
        0 => {
            let cut = rng.gen_range(1..n);
            let mut procs: Vec<usize> = (0..n).collect();
            procs.shuffle(rng);
            FaultSpec::partition(
                vec![procs[..cut].to_vec(), procs[cut..].to_vec()],
                start,
                end,
            )
        }
        1 => {
            let first = rng.gen_range(0..20);
            FaultSpec::drop_ids(first, first + rng.gen_range(0..10), start, end)
        }
        _ => FaultSpec::drop_probability(rng.gen_range(0.0..=1.0), start, end),
    }
}

/// Any fault at all, including ones that never end or never retransmit.
pub fn random_fault(rng: &mut ChaCha8Rng, n: usize, d: u64) -> FaultSpec {
    let mut f = random_transient_fault(rng, n, d);
    if rng.gen_bool(0.25) {
        f.end = FaultEnd::Forever;
    }
    f.with_retransmit(rng.gen_bool(0.7))
}

/// A scenario with arbitrary faults, including permanent ones.
pub fn faulty_scenario(seed: u64) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alg = Algorithm::ALL[rng.gen_range(0..Algorithm::ALL.len())];
    let mut spec = random_scenario(alg, seed, 8, false).probes(rng.gen_bool(0.5));
    let d = spec.delay.nominal().0;
    for _ in 0..rng.gen_range(0..=3) {
        spec = spec.fault(random_fault(&mut rng, 3, d));
    }
    spec
}

/// Runs a scenario, keeping the history even if some operation never
/// finished.
pub fn simulate(spec: &ScenarioSpec) -> History {
    match build_sim(spec).unwrap().run_to_quiescence() {
        Ok(h) => h,
        Err(NonTerminating { history, .. }) => *history,
    }
}
