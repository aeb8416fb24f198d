//! Replicated read-write registers, one per consistency level.
//!
//! | algorithm           | reads          | writes         |
//! |---------------------|----------------|----------------|
//! | `abd`               | two round trips| two round trips|
//! | `leader-fast-read`  | local          | via the leader |
//! | `leader-fast-write` | via the leader | local          |
//! | `causal`            | local          | local          |
//! | `eventual`          | local          | local          |
//! | `local-fallback`    | timeout-bounded| timeout-bounded|
//!
//! `causal` and `eventual` are set-valued: a read returns every value the
//! replica has seen. The others return a single value.

mod abd;
mod causal;
mod eventual;
mod fallback;
mod leader;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use abd::{AbdMsg, AbdReplica};
pub use causal::{CausalMsg, CausalReplica};
pub use eventual::{EventualMsg, EventualReplica};
pub use fallback::{FallbackMsg, FallbackReplica};
pub use leader::{LeaderMsg, LeaderReplica, LeaderVariant};

use crate::histories::Operation;
use crate::simnet::{Context, Node, ProcessId};

/// Totally ordered write identifier: logical timestamp, then writer.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Tag(pub u64, pub ProcessId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Value {
    pub payload: i64,
    pub writer: ProcessId,
    pub tag: Tag,
}

impl Value {
    /// Payload of the register before any write.
    pub const INITIAL_PAYLOAD: i64 = 0;

    pub fn initial() -> Value {
        Value {
            payload: Self::INITIAL_PAYLOAD,
            writer: ProcessId(0),
            tag: Tag(0, ProcessId(0)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Abd,
    LeaderFastRead,
    LeaderFastWrite,
    Causal,
    Eventual,
    LocalFallback,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Abd,
        Algorithm::LeaderFastRead,
        Algorithm::LeaderFastWrite,
        Algorithm::Causal,
        Algorithm::Eventual,
        Algorithm::LocalFallback,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Abd => "abd",
            Algorithm::LeaderFastRead => "leader-fast-read",
            Algorithm::LeaderFastWrite => "leader-fast-write",
            Algorithm::Causal => "causal",
            Algorithm::Eventual => "eventual",
            Algorithm::LocalFallback => "local-fallback",
        }
    }

    pub fn from_name(name: &str) -> Option<Algorithm> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|a| a.name()).collect()
    }

    /// Whether reads return a set of values rather than one value.
    pub fn set_valued(self) -> bool {
        matches!(self, Algorithm::Causal | Algorithm::Eventual)
    }

    pub fn uses_leader(self) -> bool {
        matches!(self, Algorithm::LeaderFastRead | Algorithm::LeaderFastWrite)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-algorithm knobs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlgorithmParams {
    pub leader: ProcessId,
    /// Give-up timeout of `local-fallback`, in ticks.
    pub timeout: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "alg", content = "msg", rename_all = "kebab-case")]
pub enum Msg {
    Abd(AbdMsg),
    Leader(LeaderMsg),
    Causal(CausalMsg),
    Eventual(EventualMsg),
    Fallback(FallbackMsg),
}

#[derive(Clone, Debug)]
pub enum Replica {
    Abd(AbdReplica),
    Leader(LeaderReplica),
    Causal(CausalReplica),
    Eventual(EventualReplica),
    Fallback(FallbackReplica),
}

impl Replica {
    pub fn new(algorithm: Algorithm, params: AlgorithmParams, me: ProcessId, n: usize) -> Replica {
        match algorithm {
            Algorithm::Abd => Replica::Abd(AbdReplica::new(me, n)),
            Algorithm::LeaderFastRead => Replica::Leader(LeaderReplica::new(
                me,
                params.leader,
                LeaderVariant::FastRead,
            )),
            Algorithm::LeaderFastWrite => Replica::Leader(LeaderReplica::new(
                me,
                params.leader,
                LeaderVariant::FastWrite,
            )),
            Algorithm::Causal => Replica::Causal(CausalReplica::new(me, n)),
            Algorithm::Eventual => Replica::Eventual(EventualReplica::new(me)),
            Algorithm::LocalFallback => {
                Replica::Fallback(FallbackReplica::new(me, n, params.timeout))
            }
        }
    }

    /// One replica per process.
    pub fn group(algorithm: Algorithm, params: AlgorithmParams, n: usize) -> Vec<Replica> {
        (0..n)
            .map(|p| Replica::new(algorithm, params, ProcessId(p), n))
            .collect()
    }

    /// Values a set-valued replica currently holds.
    pub fn store(&self) -> Option<Vec<Value>> {
        match self {
            Replica::Causal(r) => Some(r.store()),
            Replica::Eventual(r) => Some(r.store()),
            _ => None,
        }
    }
}

macro_rules! dispatch {
    ($self:expr, $ctx:expr, |$r:ident, $c:ident| $body:expr) => {
        match $self {
            Replica::Abd($r) => $ctx.scoped(Msg::Abd, |$c| $body),
            Replica::Leader($r) => $ctx.scoped(Msg::Leader, |$c| $body),
            Replica::Causal($r) => $ctx.scoped(Msg::Causal, |$c| $body),
            Replica::Eventual($r) => $ctx.scoped(Msg::Eventual, |$c| $body),
            Replica::Fallback($r) => $ctx.scoped(Msg::Fallback, |$c| $body),
        }
    };
}

impl Node for Replica {
    type Msg = Msg;

    fn on_invoke(&mut self, op: Operation, ctx: &mut Context<'_, Msg>) {
        dispatch!(self, ctx, |r, c| r.on_invoke(op, c));
    }

    fn on_message(&mut self, from: ProcessId, msg: Msg, ctx: &mut Context<'_, Msg>) {
        match (self, msg) {
            (Replica::Abd(r), Msg::Abd(m)) => ctx.scoped(Msg::Abd, |c| r.on_message(from, m, c)),
            (Replica::Leader(r), Msg::Leader(m)) => {
                ctx.scoped(Msg::Leader, |c| r.on_message(from, m, c))
            }
            (Replica::Causal(r), Msg::Causal(m)) => {
                ctx.scoped(Msg::Causal, |c| r.on_message(from, m, c))
            }
            (Replica::Eventual(r), Msg::Eventual(m)) => {
                ctx.scoped(Msg::Eventual, |c| r.on_message(from, m, c))
            }
            (Replica::Fallback(r), Msg::Fallback(m)) => {
                ctx.scoped(Msg::Fallback, |c| r.on_message(from, m, c))
            }
            (_, m) => panic!("message {m:?} addressed to a replica of another algorithm"),
        }
    }

    fn on_timer(&mut self, timer: u64, ctx: &mut Context<'_, Msg>) {
        dispatch!(self, ctx, |r, c| r.on_timer(timer, c));
    }
}
