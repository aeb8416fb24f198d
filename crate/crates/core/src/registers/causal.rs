//! Causally consistent set register. Writes apply locally and return at
//! once, then propagate with a vector clock; a receiver buffers an update
//! until it has applied everything the writer had seen.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Tag, Value};
use crate::histories::{OpOutput, Operation};
use crate::simnet::{Context, Node, ProcessId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CausalMsg {
    Update { clock: Vec<u64>, value: Value },
}

#[derive(Clone, Debug)]
pub struct CausalReplica {
    me: ProcessId,
    clock: Vec<u64>,
    store: BTreeMap<Tag, Value>,
    buffer: Vec<(ProcessId, Vec<u64>, Value)>,
}

impl CausalReplica {
    pub fn new(me: ProcessId, n: usize) -> Self {
        CausalReplica {
            me,
            clock: vec![0; n],
            store: BTreeMap::new(),
            buffer: Vec::new(),
        }
    }

    pub fn store(&self) -> Vec<Value> {
        self.store.values().copied().collect()
    }

    pub fn clock(&self) -> &[u64] {
        &self.clock
    }

    /// Updates received but not yet causally deliverable.
    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    fn deliverable(&self, sender: ProcessId, clock: &[u64]) -> bool {
        clock.iter().enumerate().all(|(k, &c)| {
            if k == sender.0 {
                c == self.clock[k] + 1
            } else {
                c <= self.clock[k]
            }
        })
    }

    fn drain(&mut self, ctx: &mut Context<'_, CausalMsg>) {
        while let Some(i) = self
            .buffer
            .iter()
            .position(|(s, c, _)| self.deliverable(*s, c))
        {
            let (sender, clock, value) = self.buffer.remove(i);
            self.clock[sender.0] = clock[sender.0];
            self.store.insert(value.tag, value);
            ctx.applied(value);
        }
    }
}

impl Node for CausalReplica {
    type Msg = CausalMsg;

    fn on_invoke(&mut self, op: Operation, ctx: &mut Context<'_, CausalMsg>) {
        match op {
            Operation::Write(payload) => {
                self.clock[self.me.0] += 1;
                let value = Value {
                    payload,
                    writer: self.me,
                    tag: Tag(self.clock[self.me.0], self.me),
                };
                self.store.insert(value.tag, value);
                ctx.broadcast(CausalMsg::Update {
                    clock: self.clock.clone(),
                    value,
                });
                ctx.complete(OpOutput::Written(value));
            }
            Operation::Read => ctx.complete(OpOutput::Set(self.store())),
        }
    }

    fn on_message(&mut self, from: ProcessId, msg: CausalMsg, ctx: &mut Context<'_, CausalMsg>) {
        let CausalMsg::Update { clock, value } = msg;
        if clock[from.0] <= self.clock[from.0] {
            return;
        }
        self.buffer.push((from, clock, value));
        self.drain(ctx);
    }
}
