//! Recorded executions and the execution predicates defined over them.
//!
//! A [`History`] is an append-only stream of [`Record`]s (one JSON object per
//! line on disk) plus derived views: the operation list, the send log and the
//! delivery log. Checkers consume histories without needing the simulator.
//!
//! On a finite trace, "every message is eventually delivered" is read as:
//! the run reached quiescence, every sent message has a delivery record, and
//! no fault that lasts forever dropped anything.

mod builder;
mod record;
mod verdict;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

pub use builder::HistoryBuilder;
pub use record::{FaultEvent, Meta, OpKind, OpOutput, Operation, Record};
pub use verdict::{Counterexample, Verdict, Witness};

use crate::registers::Value;
use crate::simnet::{ProcessId, VirtualTime};

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("history is incomplete: the run did not reach quiescence")]
    Incomplete,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed history: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One client operation, assembled from its invoke and response records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpRecord {
    pub op_id: u64,
    pub process: ProcessId,
    pub kind: OpKind,
    /// Payload written (writes only).
    pub value_in: Option<i64>,
    pub value_out: Option<OpOutput>,
    pub invoke_time: VirtualTime,
    pub requested_time: VirtualTime,
    pub response_time: Option<VirtualTime>,
    pub probe: bool,
}

impl OpRecord {
    pub fn is_complete(&self) -> bool {
        self.response_time.is_some()
    }

    /// `response - invoke`, if the operation completed.
    pub fn latency(&self) -> Option<u64> {
        self.response_time.map(|r| r.0 - self.invoke_time.0)
    }

    /// Payload returned by a single-value read.
    pub fn read_payload(&self) -> Option<i64> {
        match &self.value_out {
            Some(OpOutput::Value(v)) => Some(v.payload),
            _ => None,
        }
    }

    /// Payloads returned by a set-valued read.
    pub fn read_set(&self) -> Option<BTreeSet<i64>> {
        match &self.value_out {
            Some(OpOutput::Set(vs)) => Some(vs.iter().map(|v| v.payload).collect()),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MessageRecord {
    pub id: u64,
    pub from: ProcessId,
    pub to: ProcessId,
    pub payload: serde_json::Value,
    pub time: VirtualTime,
}

#[derive(Clone, Debug, PartialEq)]
pub struct History {
    meta: Meta,
    records: Vec<Record>,
    ops: Vec<OpRecord>,
    sends: Vec<MessageRecord>,
    deliveries: Vec<MessageRecord>,
}

impl History {
    /// Assembles a history from its header and record stream, checking that
    /// operation records are well formed.
    pub fn from_records(meta: Meta, records: Vec<Record>) -> Result<History, HistoryError> {
        let mut ops: BTreeMap<u64, OpRecord> = BTreeMap::new();
        let mut sends = Vec::new();
        let mut deliveries = Vec::new();
        for rec in &records {
            match rec {
                Record::Meta(_) => {
                    return Err(HistoryError::Malformed(
                        "meta record inside the record stream".into(),
                    ))
                }
                Record::OpInvoke {
                    time,
                    op_id,
                    process,
                    op,
                    value,
                    requested,
                    probe,
                } => {
                    if process.0 >= meta.processes {
                        return Err(HistoryError::Malformed(format!(
                            "op {op_id} names unknown process {}",
                            process.0
                        )));
                    }
                    if (*op == OpKind::Write) != value.is_some() {
                        return Err(HistoryError::Malformed(format!(
                            "op {op_id}: writes carry a value and reads do not"
                        )));
                    }
                    let prev = ops.insert(
                        *op_id,
                        OpRecord {
                            op_id: *op_id,
                            process: *process,
                            kind: *op,
                            value_in: *value,
                            value_out: None,
                            invoke_time: *time,
                            requested_time: *requested,
                            response_time: None,
                            probe: *probe,
                        },
                    );
                    if prev.is_some() {
                        return Err(HistoryError::Malformed(format!("duplicate op id {op_id}")));
                    }
                }
                Record::OpResponse {
                    time,
                    op_id,
                    process,
                    output,
                } => {
                    let op = ops.get_mut(op_id).ok_or_else(|| {
                        HistoryError::Malformed(format!("response to unknown op {op_id}"))
                    })?;
                    if op.response_time.is_some() {
                        return Err(HistoryError::Malformed(format!(
                            "op {op_id} responded twice"
                        )));
                    }
                    if op.process != *process || *time < op.invoke_time {
                        return Err(HistoryError::Malformed(format!(
                            "op {op_id}: response does not match its invocation"
                        )));
                    }
                    let kind_ok = matches!(
                        (op.kind, output),
                        (OpKind::Write, OpOutput::Written(_))
                            | (OpKind::Read, OpOutput::Value(_) | OpOutput::Set(_))
                    );
                    if !kind_ok {
                        return Err(HistoryError::Malformed(format!(
                            "op {op_id}: output kind does not match operation kind"
                        )));
                    }
                    op.response_time = Some(*time);
                    op.value_out = Some(output.clone());
                }
                Record::Send {
                    time,
                    id,
                    from,
                    to,
                    payload,
                } => sends.push(MessageRecord {
                    id: *id,
                    from: *from,
                    to: *to,
                    payload: payload.clone(),
                    time: *time,
                }),
                Record::Deliver {
                    time,
                    id,
                    from,
                    to,
                    payload,
                } => deliveries.push(MessageRecord {
                    id: *id,
                    from: *from,
                    to: *to,
                    payload: payload.clone(),
                    time: *time,
                }),
                Record::Apply { .. } | Record::Fault { .. } => {}
            }
        }

        let mut ops: Vec<OpRecord> = ops.into_values().collect();
        ops.sort_by_key(|o| (o.invoke_time, o.op_id));

        // Each process is a sequential client.
        let mut last: BTreeMap<ProcessId, &OpRecord> = BTreeMap::new();
        for op in &ops {
            if let Some(prev) = last.get(&op.process) {
                match prev.response_time {
                    Some(r) if r <= op.invoke_time => {}
                    _ => {
                        return Err(HistoryError::Malformed(format!(
                            "ops {} and {} overlap at process {}",
                            prev.op_id, op.op_id, op.process.0
                        )))
                    }
                }
            }
            last.insert(op.process, op);
        }

        Ok(History {
            meta,
            records,
            ops,
            sends,
            deliveries,
        })
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Operations sorted by invocation time.
    pub fn ops(&self) -> &[OpRecord] {
        &self.ops
    }

    pub fn op(&self, op_id: u64) -> Option<&OpRecord> {
        self.ops.iter().find(|o| o.op_id == op_id)
    }

    pub fn sends(&self) -> &[MessageRecord] {
        &self.sends
    }

    pub fn deliveries(&self) -> &[MessageRecord] {
        &self.deliveries
    }

    pub fn processes(&self) -> usize {
        self.meta.processes
    }

    pub fn horizon(&self) -> VirtualTime {
        self.meta.horizon
    }

    pub fn partition_permanent(&self) -> bool {
        self.meta.partition_permanent
    }

    pub fn is_quiescent(&self) -> bool {
        self.meta.quiescent
    }

    /// Values incorporated from other processes, in stream order.
    pub fn applies(&self) -> impl Iterator<Item = (VirtualTime, ProcessId, &Value)> {
        self.records.iter().filter_map(|r| match r {
            Record::Apply {
                time,
                process,
                value,
            } => Some((*time, *process, value)),
            _ => None,
        })
    }

    pub fn incomplete_ops(&self) -> impl Iterator<Item = &OpRecord> {
        self.ops.iter().filter(|o| !o.is_complete())
    }

    /// Violations of the partitionable-link guarantees: duplicated deliveries,
    /// deliveries of messages never sent (or altered in flight), and
    /// deliveries before the send. Empty for every simulator-produced history.
    pub fn link_violations(&self) -> Vec<String> {
        let sent: BTreeMap<u64, &MessageRecord> = self.sends.iter().map(|m| (m.id, m)).collect();
        let mut out = Vec::new();
        if sent.len() != self.sends.len() {
            out.push("message id sent more than once".to_string());
        }
        let mut delivered = BTreeSet::new();
        for d in &self.deliveries {
            if !delivered.insert(d.id) {
                out.push(format!("message {} delivered more than once", d.id));
            }
            match sent.get(&d.id) {
                None => out.push(format!("message {} delivered but never sent", d.id)),
                Some(s) => {
                    if s.from != d.from || s.to != d.to || s.payload != d.payload {
                        out.push(format!(
                            "message {} altered between send and delivery",
                            d.id
                        ));
                    }
                    if d.time < s.time {
                        out.push(format!("message {} delivered before it was sent", d.id));
                    }
                }
            }
        }
        out
    }

    /// Writes the history as newline-delimited JSON: a meta line, then one
    /// line per record.
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let meta = Record::Meta(self.meta.clone());
        serde_json::to_writer(&mut out, &meta)?;
        out.write_all(b"\n")?;
        for rec in &self.records {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_ndjson(&self) -> String {
        let mut buf = Vec::new();
        self.write_ndjson(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_ndjson<R: BufRead>(input: R) -> Result<History, HistoryError> {
        let mut meta = None;
        let mut records = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| HistoryError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match (rec, meta.is_none()) {
                (Record::Meta(m), true) => meta = Some(m),
                (Record::Meta(_), false) => {
                    return Err(HistoryError::Parse {
                        line: i + 1,
                        message: "second meta record".into(),
                    })
                }
                (_, true) => {
                    return Err(HistoryError::Parse {
                        line: i + 1,
                        message: "first record must be the meta record".into(),
                    })
                }
                (rec, false) => records.push(rec),
            }
        }
        let meta = meta.ok_or(HistoryError::Parse {
            line: 0,
            message: "empty history file".into(),
        })?;
        History::from_records(meta, records)
    }

    pub fn from_ndjson(text: &str) -> Result<History, HistoryError> {
        History::read_ndjson(text.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<History, HistoryError> {
        let f = std::fs::File::open(path)?;
        History::read_ndjson(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HistoryError> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_ndjson(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// True iff every sent message was delivered and nothing was lost forever.
pub fn is_loss_free(h: &History) -> Result<bool, HistoryError> {
    if !h.is_quiescent() {
        return Err(HistoryError::Incomplete);
    }
    if h.partition_permanent() {
        return Ok(false);
    }
    let delivered: BTreeSet<u64> = h.deliveries().iter().map(|d| d.id).collect();
    Ok(h.sends().iter().all(|s| delivered.contains(&s.id)))
}

pub fn is_partitioned(h: &History) -> Result<bool, HistoryError> {
    is_loss_free(h).map(|lf| !lf)
}

/// The opportunistic weakening of a property: satisfied when the execution
/// is partitioned, otherwise whatever `property` says.
pub fn opportunistic<E, F>(property: F, h: &History) -> Result<Verdict, E>
where
    E: From<HistoryError>,
    F: FnOnce(&History) -> Result<Verdict, E>,
{
    if is_partitioned(h)? {
        return Ok(Verdict::satisfied(Witness::Partitioned));
    }
    property(h)
}

/// Same transform stated as an implication: loss-free ⇒ property.
pub fn opportunistic_implication<E, F>(property: F, h: &History) -> Result<Verdict, E>
where
    E: From<HistoryError>,
    F: FnOnce(&History) -> Result<Verdict, E>,
{
    match is_loss_free(h)? {
        true => property(h),
        false => Ok(Verdict::satisfied(Witness::Partitioned)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_op_history() -> History {
        let mut b = HistoryBuilder::new(2);
        b.write(0, 5, 0, 10);
        b.read(1, 5, 20, 30);
        b.build()
    }

    #[test]
    fn ops_assembled_and_sorted() {
        let h = two_op_history();
        assert_eq!(h.ops().len(), 2);
        assert_eq!(h.ops()[0].kind, OpKind::Write);
        assert_eq!(h.ops()[1].read_payload(), Some(5));
        assert_eq!(h.ops()[1].latency(), Some(10));
    }

    #[test]
    fn ndjson_roundtrip() {
        let mut b = HistoryBuilder::new(2);
        b.write(0, 5, 0, 10);
        b.message(0, 1, 3, Some(8));
        b.read_set(1, &[5], 20, 20);
        b.apply(1, 5, 0, 8);
        let h = b.build();
        let text = h.to_ndjson();
        assert!(text.starts_with("{\"kind\":\"meta\""));
        let back = History::from_ndjson(&text).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.to_ndjson(), text);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let bad = "{\"kind\":\"meta\",\"format\":1,\"processes\":1,\"horizon\":10,\"end_time\":0,\"quiescent\":true,\"partition_permanent\":false}\n{\"kind\":\"nonsense\"}\n";
        match History::from_ndjson(bad) {
            Err(HistoryError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            History::from_ndjson(""),
            Err(HistoryError::Parse { .. })
        ));
    }

    #[test]
    fn overlapping_ops_at_one_process_rejected() {
        let meta = Meta::new(1, VirtualTime(100));
        let inv = |id, t| Record::OpInvoke {
            time: VirtualTime(t),
            op_id: id,
            process: ProcessId(0),
            op: OpKind::Read,
            value: None,
            requested: VirtualTime(t),
            probe: false,
        };
        let err = History::from_records(meta, vec![inv(0, 0), inv(1, 5)]).unwrap_err();
        assert!(matches!(err, HistoryError::Malformed(_)));
    }

    #[test]
    fn loss_free_predicates() {
        // no messages at all
        let h = two_op_history();
        assert!(is_loss_free(&h).unwrap());
        assert!(!is_partitioned(&h).unwrap());

        let mut b = HistoryBuilder::new(2);
        b.message(0, 1, 0, None);
        let lost = b.build();
        assert!(!is_loss_free(&lost).unwrap());

        let mut b = HistoryBuilder::new(2);
        b.message(0, 1, 0, Some(4));
        b.permanent(true);
        assert!(is_partitioned(&b.build()).unwrap());

        let mut b = HistoryBuilder::new(2);
        b.quiescent(false);
        assert!(matches!(
            is_loss_free(&b.build()),
            Err(HistoryError::Incomplete)
        ));
    }

    #[test]
    fn empty_history_is_not_partitioned() {
        let h = HistoryBuilder::new(1).build();
        assert!(!is_partitioned(&h).unwrap());
    }

    #[test]
    fn link_violations_detected() {
        let mut b = HistoryBuilder::new(2);
        b.message(0, 1, 0, Some(5));
        let ok = b.build();
        assert!(ok.link_violations().is_empty());

        let mut recs = ok.records().to_vec();
        recs.push(recs.last().unwrap().clone());
        let dup = History::from_records(ok.meta().clone(), recs).unwrap();
        assert_eq!(dup.link_violations().len(), 1);

        let created = History::from_records(
            ok.meta().clone(),
            vec![Record::Deliver {
                time: VirtualTime(1),
                id: 9,
                from: ProcessId(0),
                to: ProcessId(1),
                payload: serde_json::Value::Null,
            }],
        )
        .unwrap();
        assert!(created.link_violations()[0].contains("never sent"));
    }

    #[test]
    fn opportunistic_forms_agree() {
        let failing = |_: &History| -> Result<Verdict, HistoryError> {
            Ok(Verdict::violated(Counterexample::new("always fails")))
        };
        let mut b = HistoryBuilder::new(2);
        b.message(0, 1, 0, None);
        b.permanent(true);
        let partitioned = b.build();
        let loss_free = two_op_history();
        for h in [&partitioned, &loss_free] {
            assert_eq!(
                opportunistic(failing, h).unwrap(),
                opportunistic_implication(failing, h).unwrap()
            );
        }
        assert!(opportunistic(failing, &partitioned).unwrap().satisfied);
        assert!(!opportunistic(failing, &loss_free).unwrap().satisfied);
    }
}
