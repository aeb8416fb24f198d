//! Exhaustive search for a legal serialization of a single-value register
//! history.
//!
//! Operations are linearized one at a time; an operation may be placed once
//! every operation that must precede it has been placed. Which operations
//! must precede which is the only difference between linearizability
//! (real-time order) and sequential consistency (per-process order). Search
//! states are `(placed set, register value)` and each is explored at most
//! once.

use std::collections::HashSet;

use super::CheckError;
use crate::histories::{Counterexample, History, OpKind, OpOutput, Verdict, Witness};
use crate::registers::Value;
use crate::simnet::ProcessId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Ordering {
    RealTime,
    ProgramOrder,
}

#[derive(Clone, Debug)]
struct Op {
    id: u64,
    process: ProcessId,
    kind: OpKind,
    payload: i64,
    invoke: u64,
    response: Option<u64>,
}

struct Search<'a> {
    ops: &'a [Op],
    preds: Vec<u64>,
    required: u64,
    seen: HashSet<(u64, i64)>,
    best: u64,
    path: Vec<usize>,
}

impl Search<'_> {
    fn run(&mut self, placed: u64, value: i64) -> bool {
        if placed & self.required == self.required {
            return true;
        }
        if !self.seen.insert((placed, value)) {
            return false;
        }
        if placed.count_ones() > self.best.count_ones() {
            self.best = placed;
        }
        for (i, op) in self.ops.iter().enumerate() {
            let bit = 1u64 << i;
            if placed & bit != 0 || self.preds[i] & !placed != 0 {
                continue;
            }
            let next = match op.kind {
                OpKind::Read if op.payload != value => continue,
                OpKind::Read => value,
                OpKind::Write => op.payload,
            };
            self.path.push(i);
            if self.run(placed | bit, next) {
                return true;
            }
            self.path.pop();
        }
        false
    }
}

fn collect_ops(h: &History, bound: usize) -> Result<Vec<Op>, CheckError> {
    let mut ops = Vec::new();
    for o in h.ops() {
        let payload = match (&o.kind, &o.value_out) {
            (OpKind::Write, _) => o.value_in.expect("writes carry a value"),
            (OpKind::Read, Some(OpOutput::Value(v))) => v.payload,
            (OpKind::Read, Some(_)) => {
                return Err(CheckError::WrongRegisterKind {
                    expected: "single-value",
                    op: o.op_id,
                })
            }
            // A read that never returned constrains nothing.
            (OpKind::Read, None) => continue,
        };
        ops.push(Op {
            id: o.op_id,
            process: o.process,
            kind: o.kind,
            payload,
            invoke: o.invoke_time.0,
            response: o.response_time.map(|t| t.0),
        });
    }
    if ops.len() > bound {
        return Err(CheckError::TooLarge {
            ops: ops.len(),
            bound,
        });
    }
    Ok(ops)
}

fn predecessors(ops: &[Op], ordering: Ordering) -> Vec<u64> {
    ops.iter()
        .map(|b| {
            ops.iter()
                .enumerate()
                .filter(|(_, a)| match ordering {
                    Ordering::RealTime => a.response.is_some_and(|r| r < b.invoke),
                    Ordering::ProgramOrder => {
                        a.process == b.process && a.id != b.id && a.invoke < b.invoke
                    }
                })
                .fold(0u64, |m, (i, _)| m | (1 << i))
        })
        .collect()
}

pub(crate) fn check(h: &History, ordering: Ordering, bound: usize) -> Result<Verdict, CheckError> {
    let ops = collect_ops(h, bound)?;
    let preds = predecessors(&ops, ordering);
    // Writes that never completed may or may not have taken effect.
    let required = ops
        .iter()
        .enumerate()
        .filter(|(_, o)| o.response.is_some())
        .fold(0u64, |m, (i, _)| m | (1 << i));
    let mut search = Search {
        ops: &ops,
        preds,
        required,
        seen: HashSet::new(),
        best: 0,
        path: Vec::new(),
    };
    if search.run(0, Value::INITIAL_PAYLOAD) {
        let order = search.path.iter().map(|&i| ops[i].id).collect();
        return Ok(Verdict::satisfied(Witness::Serialization { order }));
    }
    Ok(Verdict::violated(explain(&ops, ordering, search.best)))
}

/// Names the offending read when the failure has a simple shape, otherwise
/// reports what the deepest partial serialization could not place.
fn explain(ops: &[Op], ordering: Ordering, best: u64) -> Counterexample {
    let writes: Vec<&Op> = ops.iter().filter(|o| o.kind == OpKind::Write).collect();
    for r in ops.iter().filter(|o| o.kind == OpKind::Read) {
        let source = writes.iter().find(|w| w.payload == r.payload);
        if r.payload != Value::INITIAL_PAYLOAD && source.is_none() {
            return Counterexample::new(format!(
                "read {} returned {}, which was never written",
                r.id, r.payload
            ))
            .ops([r.id])
            .value(r.payload)
            .process(r.process);
        }
        if ordering != Ordering::RealTime {
            continue;
        }
        let r_response = r.response.expect("only completed reads are collected");
        if let Some(w) = source {
            if w.invoke > r_response {
                return Counterexample::new(format!(
                    "read {} returned {} before write {} of it began",
                    r.id, r.payload, w.id
                ))
                .ops([r.id, w.id])
                .value(r.payload)
                .process(r.process);
            }
        }
        let newer = writes.iter().find(|w2| {
            w2.payload != r.payload
                && w2.response.is_some_and(|end| end < r.invoke)
                && match source {
                    None => true,
                    Some(w) => w.response.is_some_and(|end| end < w2.invoke),
                }
        });
        if let Some(w2) = newer {
            let mut involved = vec![r.id, w2.id];
            involved.extend(source.map(|w| w.id));
            return Counterexample::new(format!(
                "read {} returned stale value {}: write {} of {} completed before the read began",
                r.id, r.payload, w2.id, w2.payload
            ))
            .ops(involved)
            .value(r.payload)
            .process(r.process);
        }
    }
    let unplaced: Vec<u64> = ops
        .iter()
        .enumerate()
        .filter(|(i, o)| best & (1 << i) == 0 && o.response.is_some())
        .map(|(_, o)| o.id)
        .collect();
    Counterexample::new(format!(
        "no legal serialization; the longest legal prefix places {} of {} operations",
        best.count_ones(),
        ops.len()
    ))
    .ops(unplaced)
}

/// Replays `order` through the register and checks it against the history.
pub(crate) fn witness_is_valid(h: &History, order: &[u64], ordering: Ordering) -> bool {
    let Ok(ops) = collect_ops(h, 64) else {
        return false;
    };
    let preds = predecessors(&ops, ordering);
    let mut placed = 0u64;
    let mut value = Value::INITIAL_PAYLOAD;
    for id in order {
        let Some(i) = ops.iter().position(|o| o.id == *id) else {
            return false;
        };
        if placed & (1 << i) != 0 || preds[i] & !placed != 0 {
            return false;
        }
        match ops[i].kind {
            OpKind::Read if ops[i].payload != value => return false,
            OpKind::Read => {}
            OpKind::Write => value = ops[i].payload,
        }
        placed |= 1 << i;
    }
    ops.iter()
        .enumerate()
        .all(|(i, o)| o.response.is_none() || placed & (1 << i) != 0)
}
