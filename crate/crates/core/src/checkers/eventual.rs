use std::collections::BTreeSet;

use super::CheckError;
use crate::histories::{Counterexample, History, OpKind, OpOutput, Verdict, Witness};

/// Finite-trace eventual consistency: every probe read (issued once the
/// network has settled) returns exactly the set of all written values.
pub fn check_eventual(h: &History) -> Result<Verdict, CheckError> {
    if !h.is_quiescent() {
        return Err(crate::histories::HistoryError::Incomplete.into());
    }
    if let Some(op) = h
        .ops()
        .iter()
        .find(|o| matches!(o.value_out, Some(OpOutput::Value(_))) && o.kind == OpKind::Read)
    {
        return Err(CheckError::WrongRegisterKind {
            expected: "set-valued",
            op: op.op_id,
        });
    }
    let written: Vec<(i64, u64)> = h
        .ops()
        .iter()
        .filter(|o| o.kind == OpKind::Write)
        .map(|o| (o.value_in.expect("writes carry a value"), o.op_id))
        .collect();
    let all: BTreeSet<i64> = written.iter().map(|(v, _)| *v).collect();

    let probes: Vec<_> = h.ops().iter().filter(|o| o.probe).collect();
    if probes.is_empty() {
        return Err(CheckError::NoProbeReads);
    }
    for probe in probes {
        let Some(got) = probe.read_set() else {
            return Ok(Verdict::violated(
                Counterexample::new(format!("probe read {} never completed", probe.op_id))
                    .ops([probe.op_id])
                    .process(probe.process),
            ));
        };
        if let Some(missing) = all.difference(&got).next() {
            let w = written
                .iter()
                .find(|(v, _)| v == missing)
                .expect("from written")
                .1;
            return Ok(Verdict::violated(
                Counterexample::new(format!(
                    "value {missing} never reached {}: probe read {} returned {:?}",
                    probe.process, probe.op_id, got
                ))
                .ops([probe.op_id, w])
                .value(*missing)
                .process(probe.process),
            ));
        }
        if let Some(extra) = got.difference(&all).next() {
            return Ok(Verdict::violated(
                Counterexample::new(format!(
                    "probe read {} returned {extra}, which was never written",
                    probe.op_id
                ))
                .ops([probe.op_id])
                .value(*extra)
                .process(probe.process),
            ));
        }
    }
    Ok(Verdict::satisfied(Witness::Converged {
        values: all.into_iter().collect(),
    }))
}
