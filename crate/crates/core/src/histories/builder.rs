use std::collections::BTreeMap;

use super::{History, Meta, OpKind, OpOutput, Record};
use crate::registers::{Tag, Value};
use crate::simnet::{ProcessId, VirtualTime};

/// Hand-assembles histories for tests and theorem witnesses.
///
/// Records are stably sorted by time on [`build`](Self::build), so records
/// sharing a tick keep their insertion order.
#[derive(Debug, Clone)]
pub struct HistoryBuilder {
    meta: Meta,
    records: Vec<Record>,
    next_op: u64,
    next_msg: u64,
    written: BTreeMap<i64, Value>,
}

impl HistoryBuilder {
    pub fn new(processes: usize) -> Self {
        HistoryBuilder {
            meta: Meta::new(processes, VirtualTime(u64::MAX)),
            records: Vec::new(),
            next_op: 0,
            next_msg: 0,
            written: BTreeMap::new(),
        }
    }

    fn value_for(&self, payload: i64) -> Value {
        self.written
            .get(&payload)
            .copied()
            .unwrap_or_else(|| Value {
                payload,
                ..Value::initial()
            })
    }

    fn invoke(&mut self, p: usize, kind: OpKind, value: Option<i64>, t: u64, probe: bool) -> u64 {
        let op_id = self.next_op;
        self.next_op += 1;
        self.records.push(Record::OpInvoke {
            time: VirtualTime(t),
            op_id,
            process: ProcessId(p),
            op: kind,
            value,
            requested: VirtualTime(t),
            probe,
        });
        op_id
    }

    fn respond(&mut self, p: usize, op_id: u64, t: u64, output: OpOutput) {
        self.records.push(Record::OpResponse {
            time: VirtualTime(t),
            op_id,
            process: ProcessId(p),
            output,
        });
    }

    pub fn write_pending(&mut self, p: usize, payload: i64, invoke: u64) -> u64 {
        let op_id = self.invoke(p, OpKind::Write, Some(payload), invoke, false);
        let value = Value {
            payload,
            writer: ProcessId(p),
            tag: Tag(op_id + 1, ProcessId(p)),
        };
        self.written.insert(payload, value);
        op_id
    }

    pub fn write(&mut self, p: usize, payload: i64, invoke: u64, response: u64) -> u64 {
        let op_id = self.write_pending(p, payload, invoke);
        let value = self.written[&payload];
        self.respond(p, op_id, response, OpOutput::Written(value));
        op_id
    }

    pub fn read_pending(&mut self, p: usize, invoke: u64) -> u64 {
        self.invoke(p, OpKind::Read, None, invoke, false)
    }

    /// A single-value read returning `payload`.
    pub fn read(&mut self, p: usize, payload: i64, invoke: u64, response: u64) -> u64 {
        let op_id = self.read_pending(p, invoke);
        let v = self.value_for(payload);
        self.respond(p, op_id, response, OpOutput::Value(v));
        op_id
    }

    fn set_read(
        &mut self,
        p: usize,
        payloads: &[i64],
        invoke: u64,
        response: u64,
        probe: bool,
    ) -> u64 {
        let op_id = self.invoke(p, OpKind::Read, None, invoke, probe);
        let mut vs: Vec<Value> = payloads.iter().map(|&x| self.value_for(x)).collect();
        vs.sort_by_key(|v| v.tag);
        self.respond(p, op_id, response, OpOutput::Set(vs));
        op_id
    }

    pub fn read_set(&mut self, p: usize, payloads: &[i64], invoke: u64, response: u64) -> u64 {
        self.set_read(p, payloads, invoke, response, false)
    }

    pub fn probe_set(&mut self, p: usize, payloads: &[i64], invoke: u64, response: u64) -> u64 {
        self.set_read(p, payloads, invoke, response, true)
    }

    /// Process `p` incorporates the value `payload` at time `t`.
    pub fn apply(&mut self, p: usize, payload: i64, writer: usize, t: u64) {
        let mut value = self.value_for(payload);
        value.writer = ProcessId(writer);
        self.records.push(Record::Apply {
            time: VirtualTime(t),
            process: ProcessId(p),
            value,
        });
    }

    /// A message sent at `sent`, delivered at `delivered` if given.
    pub fn message(&mut self, from: usize, to: usize, sent: u64, delivered: Option<u64>) -> u64 {
        let id = self.next_msg;
        self.next_msg += 1;
        let payload = serde_json::json!({ "msg": id });
        self.records.push(Record::Send {
            time: VirtualTime(sent),
            id,
            from: ProcessId(from),
            to: ProcessId(to),
            payload: payload.clone(),
        });
        if let Some(t) = delivered {
            self.records.push(Record::Deliver {
                time: VirtualTime(t),
                id,
                from: ProcessId(from),
                to: ProcessId(to),
                payload,
            });
        }
        id
    }

    pub fn permanent(&mut self, permanent: bool) -> &mut Self {
        self.meta.partition_permanent = permanent;
        self
    }

    pub fn quiescent(&mut self, quiescent: bool) -> &mut Self {
        self.meta.quiescent = quiescent;
        self
    }

    pub fn horizon(&mut self, t: u64) -> &mut Self {
        self.meta.horizon = VirtualTime(t);
        self
    }

    /// Panics if the records do not form a well-formed history.
    pub fn build(&self) -> History {
        let mut records = self.records.clone();
        records.sort_by_key(|r| r.time());
        let mut meta = self.meta.clone();
        meta.end_time = records.last().map(|r| r.time()).unwrap_or_default();
        History::from_records(meta, records).expect("builder produced a malformed history")
    }
}
