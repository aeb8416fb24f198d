use serde::{Deserialize, Serialize};

use crate::registers::Value;
use crate::simnet::{FaultSpec, ProcessId, VirtualTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    Read,
    Write,
}

/// A client request handed to a replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operation {
    Read,
    Write(i64),
}

impl Operation {
    pub fn kind(&self) -> OpKind {
        match self {
            Operation::Read => OpKind::Read,
            Operation::Write(_) => OpKind::Write,
        }
    }

    pub fn value(&self) -> Option<i64> {
        match self {
            Operation::Read => None,
            Operation::Write(v) => Some(*v),
        }
    }
}

/// What a completed operation returned.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpOutput {
    /// A write finished; carries the tagged value that was stored.
    Written(Value),
    /// Single-value register read.
    Value(Value),
    /// Set-valued register read, sorted by tag.
    Set(Vec<Value>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultEvent {
    Start,
    End,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Header line of a history file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub format: u32,
    pub processes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    pub horizon: VirtualTime,
    pub end_time: VirtualTime,
    /// The run reached quiescence (as opposed to being stopped mid-way).
    pub quiescent: bool,
    /// Some message was dropped by a fault that never ends.
    pub partition_permanent: bool,
}

impl Meta {
    pub const FORMAT: u32 = 1;

    pub fn new(processes: usize, horizon: VirtualTime) -> Self {
        Meta {
            format: Self::FORMAT,
            processes,
            algorithm: None,
            horizon,
            end_time: VirtualTime(0),
            quiescent: true,
            partition_permanent: false,
        }
    }
}

/// One line of the append-only history stream.
///
/// Field names are part of the on-disk format and must not change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Record {
    Meta(Meta),
    OpInvoke {
        time: VirtualTime,
        op_id: u64,
        process: ProcessId,
        op: OpKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<i64>,
        /// When the workload asked for the operation; differs from `time`
        /// when the client was still busy with an earlier operation.
        requested: VirtualTime,
        #[serde(default, skip_serializing_if = "is_false")]
        probe: bool,
    },
    OpResponse {
        time: VirtualTime,
        op_id: u64,
        process: ProcessId,
        output: OpOutput,
    },
    Send {
        time: VirtualTime,
        id: u64,
        from: ProcessId,
        to: ProcessId,
        payload: serde_json::Value,
    },
    Deliver {
        time: VirtualTime,
        id: u64,
        from: ProcessId,
        to: ProcessId,
        payload: serde_json::Value,
    },
    /// A replica incorporated a value written at another process.
    Apply {
        time: VirtualTime,
        process: ProcessId,
        value: Value,
    },
    Fault {
        time: VirtualTime,
        index: usize,
        event: FaultEvent,
        fault: FaultSpec,
    },
}

impl Record {
    pub fn time(&self) -> VirtualTime {
        match self {
            Record::Meta(m) => m.end_time,
            Record::OpInvoke { time, .. }
            | Record::OpResponse { time, .. }
            | Record::Send { time, .. }
            | Record::Deliver { time, .. }
            | Record::Apply { time, .. }
            | Record::Fault { time, .. } => *time,
        }
    }
}
