//! Decision procedures for the consistency properties, applied to recorded
//! histories. All checkers are pure functions of an immutable [`History`].
//!
//! Values are identified by payload; scenario validation guarantees that
//! each payload is written at most once and that 0 is the initial value.

mod causal;
mod eventual;
mod register;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::histories::{Counterexample, History, HistoryError, Verdict, Witness};
use crate::simnet::ProcessId;

pub use causal::check_causal;
pub use eventual::check_eventual;

/// Largest history the exhaustive register search accepts by default.
pub const DEFAULT_MAX_OPS: usize = 12;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("history has {ops} operations; the exhaustive search is bounded at {bound}")]
    TooLarge { ops: usize, bound: usize },
    #[error("op {op} does not have {expected} read semantics")]
    WrongRegisterKind { expected: &'static str, op: u64 },
    #[error("op {op} at {process} returned {value} with no record of it being applied there")]
    MissingMetadata {
        op: u64,
        value: i64,
        process: ProcessId,
    },
    #[error("history has no probe reads")]
    NoProbeReads,
    #[error(transparent)]
    History(#[from] HistoryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PropertyName {
    Linearizability,
    Sequential,
    Causal,
    Eventual,
}

impl PropertyName {
    pub const ALL: [PropertyName; 4] = [
        PropertyName::Linearizability,
        PropertyName::Sequential,
        PropertyName::Causal,
        PropertyName::Eventual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropertyName::Linearizability => "linearizability",
            PropertyName::Sequential => "sequential",
            PropertyName::Causal => "causal",
            PropertyName::Eventual => "eventual",
        }
    }
}

impl fmt::Display for PropertyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PropertyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown property {s:?}; expected one of: {}",
                    Self::ALL.map(|p| p.name()).join(", ")
                )
            })
    }
}

/// Runs the checker for `property`.
pub fn check(property: PropertyName, h: &History) -> Result<Verdict, CheckError> {
    match property {
        PropertyName::Linearizability => check_linearizable(h),
        PropertyName::Sequential => check_sequential(h),
        PropertyName::Causal => check_causal(h),
        PropertyName::Eventual => check_eventual(h),
    }
}

/// Is there a total order respecting real-time precedence in which every
/// read returns the latest preceding write (or the initial value)?
pub fn check_linearizable(h: &History) -> Result<Verdict, CheckError> {
    check_linearizable_bounded(h, DEFAULT_MAX_OPS)
}

pub fn check_linearizable_bounded(h: &History, max_ops: usize) -> Result<Verdict, CheckError> {
    register::check(h, register::Ordering::RealTime, max_ops.min(64))
}

/// Like [`check_linearizable`] but only per-process program order must be
/// respected.
pub fn check_sequential(h: &History) -> Result<Verdict, CheckError> {
    check_sequential_bounded(h, DEFAULT_MAX_OPS)
}

pub fn check_sequential_bounded(h: &History, max_ops: usize) -> Result<Verdict, CheckError> {
    register::check(h, register::Ordering::ProgramOrder, max_ops.min(64))
}

/// Linearizable and every operation completed.
pub fn check_terminating_linearizable(h: &History) -> Result<Verdict, CheckError> {
    let stuck: Vec<u64> = h.incomplete_ops().map(|o| o.op_id).collect();
    if !stuck.is_empty() {
        return Ok(Verdict::violated(
            Counterexample::new("operation(s) never terminated").ops(stuck),
        ));
    }
    check_linearizable(h)
}

/// Checks that a serialization witness is legal for `property`, which must
/// be linearizability or sequential consistency.
pub fn witness_is_valid(h: &History, property: PropertyName, witness: &Witness) -> bool {
    let Witness::Serialization { order } = witness else {
        return false;
    };
    let ordering = match property {
        PropertyName::Linearizability => register::Ordering::RealTime,
        PropertyName::Sequential => register::Ordering::ProgramOrder,
        _ => return false,
    };
    register::witness_is_valid(h, order, ordering)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::HistoryBuilder;

    fn lin(h: &History) -> Verdict {
        check_linearizable(h).unwrap()
    }

    fn seq(h: &History) -> Verdict {
        check_sequential(h).unwrap()
    }

    #[test]
    fn empty_history_linearizable() {
        let h = HistoryBuilder::new(2).build();
        let v = lin(&h);
        assert!(v.satisfied);
        assert_eq!(v.witness, Some(Witness::Serialization { order: vec![] }));
    }

    #[test]
    fn stale_read_after_completed_write() {
        // write(p, v2) completes, then read(q) returns the initial value
        let mut b = HistoryBuilder::new(2);
        let w = b.write(0, 2, 0, 100);
        let r = b.read(1, 0, 110, 210);
        let h = b.build();
        let v = lin(&h);
        assert!(!v.satisfied);
        let c = v.counterexample.unwrap();
        assert_eq!(c.ops[..2], [r, w]);
        assert_eq!(c.process, Some(ProcessId(1)));
        // without real-time order the read can go first
        assert!(seq(&h).satisfied);
    }

    #[test]
    fn concurrent_read_may_see_either() {
        for returned in [0, 7] {
            let mut b = HistoryBuilder::new(2);
            b.write(0, 7, 0, 50);
            b.read(1, returned, 10, 40);
            assert!(lin(&b.build()).satisfied, "returned {returned}");
        }
    }

    #[test]
    fn read_from_the_future_rejected() {
        let mut b = HistoryBuilder::new(2);
        b.read(1, 7, 0, 5);
        b.write(0, 7, 10, 20);
        let v = lin(&b.build());
        assert!(!v.satisfied);
        assert!(v.counterexample.unwrap().reason.contains("before write"));
    }

    #[test]
    fn unwritten_value_rejected() {
        let mut b = HistoryBuilder::new(1);
        b.read(0, 42, 0, 5);
        let h = b.build();
        assert!(!lin(&h).satisfied);
        assert!(!seq(&h).satisfied);
    }

    #[test]
    fn process_cannot_unwrite() {
        // one process reads v2 then v1 with no interleaved write
        let mut b = HistoryBuilder::new(3);
        b.write(0, 1, 0, 10);
        b.write(0, 2, 20, 30);
        b.read(1, 2, 40, 50);
        b.read(1, 1, 60, 70);
        let h = b.build();
        assert!(!seq(&h).satisfied);
        assert!(!lin(&h).satisfied);
    }

    #[test]
    fn pending_write_may_take_effect() {
        let mut b = HistoryBuilder::new(2);
        b.write_pending(0, 5, 0);
        b.read(1, 5, 10, 20);
        b.read(1, 5, 30, 40);
        let h = b.build();
        assert!(lin(&h).satisfied);

        let mut b = HistoryBuilder::new(2);
        b.write_pending(0, 5, 0);
        b.read(1, 0, 10, 20);
        assert!(lin(&b.build()).satisfied);
    }

    #[test]
    fn witnesses_replay() {
        let mut b = HistoryBuilder::new(3);
        b.write(0, 1, 0, 30);
        b.write(1, 2, 5, 25);
        b.read(2, 1, 35, 40);
        b.read(1, 1, 50, 60);
        let h = b.build();
        for p in [PropertyName::Linearizability, PropertyName::Sequential] {
            let v = check(p, &h).unwrap();
            assert!(v.satisfied);
            assert!(witness_is_valid(&h, p, v.witness.as_ref().unwrap()));
        }
        let bogus = Witness::Serialization {
            order: vec![3, 2, 1, 0],
        };
        assert!(!witness_is_valid(&h, PropertyName::Linearizability, &bogus));
    }

    #[test]
    fn bounds_and_kinds_enforced() {
        let mut b = HistoryBuilder::new(1);
        for i in 0..13 {
            b.write(0, i + 1, (i * 10) as u64, (i * 10 + 5) as u64);
        }
        assert!(matches!(
            check_linearizable(&b.build()),
            Err(CheckError::TooLarge { ops: 13, bound: 12 })
        ));

        let mut b = HistoryBuilder::new(1);
        b.read_set(0, &[], 0, 0);
        assert!(matches!(
            check_linearizable(&b.build()),
            Err(CheckError::WrongRegisterKind { .. })
        ));
    }

    #[test]
    fn terminating_linearizability_requires_completion() {
        let mut b = HistoryBuilder::new(1);
        b.read_pending(0, 0);
        let v = check_terminating_linearizable(&b.build()).unwrap();
        assert!(!v.satisfied);
    }

    #[test]
    fn property_names_parse() {
        for p in PropertyName::ALL {
            assert_eq!(p.name().parse::<PropertyName>().unwrap(), p);
        }
        assert!("strong"
            .parse::<PropertyName>()
            .unwrap_err()
            .contains("linearizability"));
    }
}
