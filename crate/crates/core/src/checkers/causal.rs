use std::collections::{BTreeMap, BTreeSet};

use super::CheckError;
use crate::histories::{Counterexample, History, OpKind, OpOutput, Record, Verdict, Witness};
use crate::simnet::ProcessId;

/// Every read must contain every write that causally precedes it.
///
/// Causal precedence is the transitive closure of program order, the
/// write → apply edge recorded when a replica incorporates a remote value,
/// and the write → read edge for every value a read returns. Records are
/// consumed in stream order, so each process's causal past is a running
/// union.
pub fn check_causal(h: &History) -> Result<Verdict, CheckError> {
    let n = h.processes();
    // causal past of each write, keyed by payload (the write itself included)
    let mut write_past: BTreeMap<i64, BTreeSet<i64>> = BTreeMap::new();
    let mut write_op: BTreeMap<i64, (u64, ProcessId)> = BTreeMap::new();
    let mut past: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); n];
    let mut visible: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); n];
    let mut reads = 0usize;

    for rec in h.records() {
        match rec {
            Record::OpInvoke {
                op_id,
                process,
                op: OpKind::Write,
                value: Some(v),
                ..
            } => {
                let p = process.0;
                past[p].insert(*v);
                visible[p].insert(*v);
                write_past.insert(*v, past[p].clone());
                write_op.insert(*v, (*op_id, *process));
            }
            Record::Apply { process, value, .. } => {
                let Some(wp) = write_past.get(&value.payload) else {
                    return Ok(Verdict::violated(
                        Counterexample::new(format!(
                            "{} applied {} before any write of it",
                            process, value.payload
                        ))
                        .value(value.payload)
                        .process(*process),
                    ));
                };
                past[process.0].extend(wp.iter().copied());
                visible[process.0].insert(value.payload);
            }
            Record::OpResponse {
                op_id,
                process,
                output,
                ..
            } => {
                let set = match output {
                    OpOutput::Written(_) => continue,
                    OpOutput::Value(_) => {
                        return Err(CheckError::WrongRegisterKind {
                            expected: "set-valued",
                            op: *op_id,
                        })
                    }
                    OpOutput::Set(vs) => vs.iter().map(|v| v.payload).collect::<BTreeSet<i64>>(),
                };
                reads += 1;
                let p = process.0;
                let mut required = past[p].clone();
                for v in &set {
                    let Some(wp) = write_past.get(v) else {
                        return Ok(Verdict::violated(
                            Counterexample::new(format!(
                                "read {op_id} returned {v}, which had not been written"
                            ))
                            .ops([*op_id])
                            .value(*v)
                            .process(*process),
                        ));
                    };
                    if !visible[p].contains(v) {
                        return Err(CheckError::MissingMetadata {
                            op: *op_id,
                            value: *v,
                            process: *process,
                        });
                    }
                    required.extend(wp.iter().copied());
                }
                if let Some(missing) = required.difference(&set).next() {
                    let (w, writer) = write_op[missing];
                    return Ok(Verdict::violated(
                        Counterexample::new(format!(
                            "read {op_id} at {process} misses {missing}, written by {writer} in op {w}, which causally precedes it"
                        ))
                        .ops([*op_id, w])
                        .value(*missing)
                        .process(*process),
                    ));
                }
                past[p] = required;
            }
            _ => {}
        }
    }
    Ok(Verdict::satisfied(Witness::CausallyClosed { reads }))
}
