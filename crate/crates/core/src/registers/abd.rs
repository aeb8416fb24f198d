//! Multi-writer ABD: every operation queries a majority for the highest tag,
//! then stores the chosen value at a majority before returning. Reads write
//! back what they return, so a later read can never see an older value.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Tag, Value};
use crate::histories::{OpKind, OpOutput, Operation};
use crate::simnet::{Context, Node, ProcessId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum AbdMsg {
    Query { rid: u64 },
    QueryReply { rid: u64, value: Value },
    Update { rid: u64, value: Value },
    UpdateAck { rid: u64 },
}

#[derive(Clone, Debug)]
enum Phase {
    Query {
        rid: u64,
        kind: OpKind,
        payload: Option<i64>,
        responders: BTreeSet<ProcessId>,
        best: Value,
    },
    Update {
        rid: u64,
        kind: OpKind,
        value: Value,
        acks: BTreeSet<ProcessId>,
    },
}

#[derive(Clone, Debug)]
pub struct AbdReplica {
    me: ProcessId,
    n: usize,
    current: Value,
    rid: u64,
    phase: Option<Phase>,
}

impl AbdReplica {
    pub fn new(me: ProcessId, n: usize) -> Self {
        AbdReplica {
            me,
            n,
            current: Value::initial(),
            rid: 0,
            phase: None,
        }
    }

    pub fn current(&self) -> Value {
        self.current
    }

    fn majority(&self) -> usize {
        self.n / 2 + 1
    }

    fn adopt(&mut self, v: Value) {
        if v.tag > self.current.tag {
            self.current = v;
        }
    }

    fn advance(&mut self, ctx: &mut Context<'_, AbdMsg>) {
        let majority = self.majority();
        if let Some(Phase::Query {
            rid,
            kind,
            payload,
            responders,
            best,
        }) = &self.phase
        {
            if responders.len() < majority {
                return;
            }
            let (rid, kind) = (*rid, *kind);
            let value = match payload {
                Some(p) => Value {
                    payload: *p,
                    writer: self.me,
                    tag: Tag(best.tag.0 + 1, self.me),
                },
                None => *best,
            };
            self.adopt(value);
            self.phase = Some(Phase::Update {
                rid,
                kind,
                value,
                acks: BTreeSet::from([self.me]),
            });
            ctx.broadcast(AbdMsg::Update { rid, value });
        }
        if let Some(Phase::Update {
            kind, value, acks, ..
        }) = &self.phase
        {
            if acks.len() < majority {
                return;
            }
            let out = match kind {
                OpKind::Write => OpOutput::Written(*value),
                OpKind::Read => OpOutput::Value(*value),
            };
            self.phase = None;
            ctx.complete(out);
        }
    }
}

impl Node for AbdReplica {
    type Msg = AbdMsg;

    fn on_invoke(&mut self, op: Operation, ctx: &mut Context<'_, AbdMsg>) {
        self.rid += 1;
        let rid = self.rid;
        self.phase = Some(Phase::Query {
            rid,
            kind: op.kind(),
            payload: op.value(),
            responders: BTreeSet::from([self.me]),
            best: self.current,
        });
        ctx.broadcast(AbdMsg::Query { rid });
        self.advance(ctx);
    }

    fn on_message(&mut self, from: ProcessId, msg: AbdMsg, ctx: &mut Context<'_, AbdMsg>) {
        match msg {
            AbdMsg::Query { rid } => ctx.send(
                from,
                AbdMsg::QueryReply {
                    rid,
                    value: self.current,
                },
            ),
            AbdMsg::Update { rid, value } => {
                self.adopt(value);
                ctx.send(from, AbdMsg::UpdateAck { rid });
            }
            AbdMsg::QueryReply { rid, value } => {
                if let Some(Phase::Query {
                    rid: r,
                    responders,
                    best,
                    ..
                }) = &mut self.phase
                {
                    if *r == rid {
                        responders.insert(from);
                        if value.tag > best.tag {
                            *best = value;
                        }
                        self.advance(ctx);
                    }
                }
            }
            AbdMsg::UpdateAck { rid } => {
                if let Some(Phase::Update { rid: r, acks, .. }) = &mut self.phase {
                    if *r == rid {
                        acks.insert(from);
                        self.advance(ctx);
                    }
                }
            }
        }
    }
}
