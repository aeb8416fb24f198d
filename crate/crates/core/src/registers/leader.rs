//! Sequentially consistent register built on a static leader that assigns a
//! global sequence number to every write and broadcasts the commit.
//!
//! Every replica applies commits in sequence order. Two variants trade read
//! latency against write latency:
//!
//! * fast read: reads return the local replica immediately; a write returns
//!   once the writer's own replica has applied its commit.
//! * fast write: writes return immediately; a read first asks the leader for
//!   its current sequence number and returns once the local replica has
//!   caught up to it and applied all of the reader's own earlier writes.
//!
//! Requests from one client are sequenced in the order the client issued
//! them, whatever order the network delivers them in.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Tag, Value};
use crate::histories::{OpOutput, Operation};
use crate::simnet::{Context, Node, ProcessId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeaderVariant {
    FastRead,
    FastWrite,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LeaderMsg {
    WriteReq {
        client_seq: u64,
        payload: i64,
    },
    Commit {
        seq: u64,
        value: Value,
        client_seq: u64,
    },
    SyncReq {
        rid: u64,
    },
    SyncReply {
        rid: u64,
        upto: u64,
    },
}

#[derive(Clone, Debug)]
enum Waiting {
    WriteCommit { client_seq: u64 },
    ReadSync { rid: u64 },
    ReadUntil { upto: u64 },
}

#[derive(Clone, Debug)]
pub struct LeaderReplica {
    me: ProcessId,
    leader: ProcessId,
    variant: LeaderVariant,
    current: Value,
    applied_upto: u64,
    commits: BTreeMap<u64, (Value, u64)>,
    // leader only
    last_seq: u64,
    expected: BTreeMap<ProcessId, u64>,
    held: BTreeMap<(ProcessId, u64), i64>,
    // client side
    client_seq: u64,
    rid: u64,
    own_pending: BTreeSet<u64>,
    waiting: Option<Waiting>,
}

impl LeaderReplica {
    pub fn new(me: ProcessId, leader: ProcessId, variant: LeaderVariant) -> Self {
        LeaderReplica {
            me,
            leader,
            variant,
            current: Value::initial(),
            applied_upto: 0,
            commits: BTreeMap::new(),
            last_seq: 0,
            expected: BTreeMap::new(),
            held: BTreeMap::new(),
            client_seq: 0,
            rid: 0,
            own_pending: BTreeSet::new(),
            waiting: None,
        }
    }

    pub fn current(&self) -> Value {
        self.current
    }

    pub fn applied_upto(&self) -> u64 {
        self.applied_upto
    }

    fn is_leader(&self) -> bool {
        self.me == self.leader
    }

    /// Leader: queue a client's write and sequence everything that is next
    /// in that client's order.
    fn accept(
        &mut self,
        origin: ProcessId,
        client_seq: u64,
        payload: i64,
        ctx: &mut Context<'_, LeaderMsg>,
    ) {
        self.held.insert((origin, client_seq), payload);
        loop {
            let next = *self.expected.get(&origin).unwrap_or(&1);
            let Some(payload) = self.held.remove(&(origin, next)) else {
                break;
            };
            self.expected.insert(origin, next + 1);
            self.last_seq += 1;
            let seq = self.last_seq;
            let value = Value {
                payload,
                writer: origin,
                tag: Tag(seq, origin),
            };
            ctx.broadcast(LeaderMsg::Commit {
                seq,
                value,
                client_seq: next,
            });
            self.commit(seq, value, next, ctx);
        }
    }

    fn commit(
        &mut self,
        seq: u64,
        value: Value,
        client_seq: u64,
        ctx: &mut Context<'_, LeaderMsg>,
    ) {
        self.commits.insert(seq, (value, client_seq));
        while let Some((value, cs)) = self.commits.remove(&(self.applied_upto + 1)) {
            self.applied_upto += 1;
            self.current = value;
            if value.writer == self.me {
                self.own_pending.remove(&cs);
                if let Some(Waiting::WriteCommit { client_seq }) = self.waiting {
                    if client_seq == cs {
                        self.waiting = None;
                        ctx.complete(OpOutput::Written(value));
                    }
                }
            }
        }
        self.try_finish_read(ctx);
    }

    fn try_finish_read(&mut self, ctx: &mut Context<'_, LeaderMsg>) {
        if let Some(Waiting::ReadUntil { upto }) = self.waiting {
            if self.applied_upto >= upto && self.own_pending.is_empty() {
                self.waiting = None;
                ctx.complete(OpOutput::Value(self.current));
            }
        }
    }
}

impl Node for LeaderReplica {
    type Msg = LeaderMsg;

    fn on_invoke(&mut self, op: Operation, ctx: &mut Context<'_, LeaderMsg>) {
        match (op, self.variant) {
            (Operation::Write(payload), LeaderVariant::FastRead) => {
                self.client_seq += 1;
                let cs = self.client_seq;
                self.waiting = Some(Waiting::WriteCommit { client_seq: cs });
                if self.is_leader() {
                    self.accept(self.me, cs, payload, ctx);
                } else {
                    ctx.send(
                        self.leader,
                        LeaderMsg::WriteReq {
                            client_seq: cs,
                            payload,
                        },
                    );
                }
            }
            (Operation::Write(payload), LeaderVariant::FastWrite) => {
                self.client_seq += 1;
                let cs = self.client_seq;
                // The sequence number is not known yet; report the untagged value.
                ctx.complete(OpOutput::Written(Value {
                    payload,
                    writer: self.me,
                    tag: Tag(0, self.me),
                }));
                self.own_pending.insert(cs);
                if self.is_leader() {
                    self.accept(self.me, cs, payload, ctx);
                } else {
                    ctx.send(
                        self.leader,
                        LeaderMsg::WriteReq {
                            client_seq: cs,
                            payload,
                        },
                    );
                }
            }
            (Operation::Read, LeaderVariant::FastRead) => {
                ctx.complete(OpOutput::Value(self.current));
            }
            (Operation::Read, LeaderVariant::FastWrite) => {
                if self.is_leader() {
                    self.waiting = Some(Waiting::ReadUntil {
                        upto: self.last_seq,
                    });
                    self.try_finish_read(ctx);
                } else {
                    self.rid += 1;
                    self.waiting = Some(Waiting::ReadSync { rid: self.rid });
                    ctx.send(self.leader, LeaderMsg::SyncReq { rid: self.rid });
                }
            }
        }
    }

    fn on_message(&mut self, from: ProcessId, msg: LeaderMsg, ctx: &mut Context<'_, LeaderMsg>) {
        match msg {
            LeaderMsg::WriteReq {
                client_seq,
                payload,
            } => {
                debug_assert!(self.is_leader());
                self.accept(from, client_seq, payload, ctx);
            }
            LeaderMsg::Commit {
                seq,
                value,
                client_seq,
            } => self.commit(seq, value, client_seq, ctx),
            LeaderMsg::SyncReq { rid } => ctx.send(
                from,
                LeaderMsg::SyncReply {
                    rid,
                    upto: self.last_seq,
                },
            ),
            LeaderMsg::SyncReply { rid, upto } => {
                if let Some(Waiting::ReadSync { rid: r }) = self.waiting {
                    if r == rid {
                        self.waiting = Some(Waiting::ReadUntil { upto });
                        self.try_finish_read(ctx);
                    }
                }
            }
        }
    }
}
