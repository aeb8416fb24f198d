//! Grow-only set register: a write adds its value locally and broadcasts
//! it; receivers merge by union. Convergence relies on the link layer
//! eventually delivering every broadcast.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Tag, Value};
use crate::histories::{OpOutput, Operation};
use crate::simnet::{Context, Node, ProcessId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventualMsg {
    Add { value: Value },
}

#[derive(Clone, Debug)]
pub struct EventualReplica {
    me: ProcessId,
    counter: u64,
    store: BTreeMap<Tag, Value>,
}

impl EventualReplica {
    pub fn new(me: ProcessId) -> Self {
        EventualReplica {
            me,
            counter: 0,
            store: BTreeMap::new(),
        }
    }

    pub fn store(&self) -> Vec<Value> {
        self.store.values().copied().collect()
    }
}

impl Node for EventualReplica {
    type Msg = EventualMsg;

    fn on_invoke(&mut self, op: Operation, ctx: &mut Context<'_, EventualMsg>) {
        match op {
            Operation::Write(payload) => {
                self.counter += 1;
                let value = Value {
                    payload,
                    writer: self.me,
                    tag: Tag(self.counter, self.me),
                };
                self.store.insert(value.tag, value);
                ctx.broadcast(EventualMsg::Add { value });
                ctx.complete(OpOutput::Written(value));
            }
            Operation::Read => ctx.complete(OpOutput::Set(self.store())),
        }
    }

    fn on_message(
        &mut self,
        _from: ProcessId,
        msg: EventualMsg,
        ctx: &mut Context<'_, EventualMsg>,
    ) {
        let EventualMsg::Add { value } = msg;
        if self.store.insert(value.tag, value).is_none() {
            ctx.applied(value);
        }
    }
}
