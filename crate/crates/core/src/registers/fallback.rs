//! A register that always terminates: each operation contacts every peer
//! but gives up after a fixed timeout and answers from local state. It is
//! not linearizable when messages are lost or slow, which is exactly what
//! the impossibility replays need.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Tag, Value};
use crate::histories::{OpOutput, Operation};
use crate::simnet::{Context, Node, ProcessId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum FallbackMsg {
    Update { rid: u64, value: Value },
    Ack { rid: u64 },
    Query { rid: u64 },
    Reply { rid: u64, value: Value },
}

#[derive(Clone, Debug)]
enum Pending {
    Write { rid: u64, value: Value },
    Read { rid: u64 },
}

#[derive(Clone, Debug)]
pub struct FallbackReplica {
    me: ProcessId,
    n: usize,
    timeout: u64,
    current: Value,
    rid: u64,
    pending: Option<Pending>,
    heard: BTreeSet<ProcessId>,
}

impl FallbackReplica {
    pub fn new(me: ProcessId, n: usize, timeout: u64) -> Self {
        FallbackReplica {
            me,
            n,
            timeout,
            current: Value::initial(),
            rid: 0,
            pending: None,
            heard: BTreeSet::new(),
        }
    }

    pub fn current(&self) -> Value {
        self.current
    }

    fn adopt(&mut self, v: Value) {
        if v.tag > self.current.tag {
            self.current = v;
        }
    }

    fn finish(&mut self, ctx: &mut Context<'_, FallbackMsg>) {
        match self.pending.take() {
            Some(Pending::Write { value, .. }) => ctx.complete(OpOutput::Written(value)),
            Some(Pending::Read { .. }) => ctx.complete(OpOutput::Value(self.current)),
            None => {}
        }
    }

    fn pending_rid(&self) -> Option<u64> {
        match self.pending {
            Some(Pending::Write { rid, .. }) | Some(Pending::Read { rid }) => Some(rid),
            None => None,
        }
    }

    fn heard_from(&mut self, from: ProcessId, ctx: &mut Context<'_, FallbackMsg>) {
        self.heard.insert(from);
        if self.heard.len() + 1 >= self.n {
            self.finish(ctx);
        }
    }
}

impl Node for FallbackReplica {
    type Msg = FallbackMsg;

    fn on_invoke(&mut self, op: Operation, ctx: &mut Context<'_, FallbackMsg>) {
        self.rid += 1;
        let rid = self.rid;
        self.heard.clear();
        match op {
            Operation::Write(payload) => {
                let value = Value {
                    payload,
                    writer: self.me,
                    tag: Tag(self.current.tag.0 + 1, self.me),
                };
                self.adopt(value);
                self.pending = Some(Pending::Write { rid, value });
                ctx.broadcast(FallbackMsg::Update { rid, value });
            }
            Operation::Read => {
                self.pending = Some(Pending::Read { rid });
                ctx.broadcast(FallbackMsg::Query { rid });
            }
        }
        if self.n == 1 {
            self.finish(ctx);
        } else {
            ctx.set_timer(self.timeout, rid);
        }
    }

    fn on_message(
        &mut self,
        from: ProcessId,
        msg: FallbackMsg,
        ctx: &mut Context<'_, FallbackMsg>,
    ) {
        match msg {
            FallbackMsg::Update { rid, value } => {
                self.adopt(value);
                ctx.send(from, FallbackMsg::Ack { rid });
            }
            FallbackMsg::Query { rid } => ctx.send(
                from,
                FallbackMsg::Reply {
                    rid,
                    value: self.current,
                },
            ),
            FallbackMsg::Ack { rid } => {
                if self.pending_rid() == Some(rid) {
                    self.heard_from(from, ctx);
                }
            }
            FallbackMsg::Reply { rid, value } => {
                if self.pending_rid() == Some(rid) {
                    self.adopt(value);
                    self.heard_from(from, ctx);
                }
            }
        }
    }

    fn on_timer(&mut self, timer: u64, ctx: &mut Context<'_, FallbackMsg>) {
        if self.pending_rid() == Some(timer) {
            self.finish(ctx);
        }
    }
}
