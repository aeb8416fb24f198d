//! The executions used to show that no terminating register is
//! linearizable once links can lose messages, and that eventual
//! consistency cannot hold in partitioned executions.
//!
//! E1: p writes v while every message between p and q is lost; the write
//! gives up waiting and returns, then q reads and returns the initial value.
//! E2: the same schedule, except that the lost messages are only late. They
//! are all delivered, but only after q's read has returned, so neither
//! process can tell E2 from E1 before then.

use serde::Serialize;

use super::{run, ExperimentError};
use crate::checkers::{check_eventual, check_linearizable, CheckError};
use crate::histories::{is_loss_free, opportunistic, History, OpKind, Verdict};
use crate::scenario::ScenarioSpec;
use crate::simnet::{ProcessId, VirtualTime};

pub const THEOREM1_E1: &str = include_str!("../../scenarios/theorem1_e1.json");
pub const THEOREM1_E2: &str = include_str!("../../scenarios/theorem1_e2.json");
pub const THEOREM3_FOREVER: &str = include_str!("../../scenarios/theorem3_forever.json");
pub const THEOREM3_HEALED: &str = include_str!("../../scenarios/theorem3_healed.json");

#[derive(Clone, Debug, Serialize)]
pub struct Theorem1Replay {
    #[serde(skip)]
    pub e1: History,
    #[serde(skip)]
    pub e2: History,
    pub e1_linearizable: Verdict,
    pub e2_linearizable: Verdict,
    pub e1_loss_free: bool,
    pub e2_loss_free: bool,
    /// When q's read returned in E2.
    pub read_response: VirtualTime,
    /// Earliest delivery in E2.
    pub first_delivery: Option<VirtualTime>,
}

impl Theorem1Replay {
    /// Every delivery of E2 happens after q's read has returned.
    pub fn deliveries_after_read(&self) -> bool {
        self.e2
            .deliveries()
            .iter()
            .all(|m| m.time > self.read_response)
    }

    pub fn as_expected(&self) -> bool {
        !self.e1_loss_free
            && !self.e1_linearizable.satisfied
            && self.e2_loss_free
            && !self.e2_linearizable.satisfied
            && self.deliveries_after_read()
    }
}

fn load(text: &str) -> Result<ScenarioSpec, ExperimentError> {
    Ok(ScenarioSpec::from_json(text)?)
}

pub fn replay_theorem_1() -> Result<Theorem1Replay, ExperimentError> {
    // Both runs terminate: run() fails on any operation left pending.
    let e1 = run(&load(THEOREM1_E1)?)?;
    let e2 = run(&load(THEOREM1_E2)?)?;
    let read = e2
        .ops()
        .iter()
        .find(|o| o.kind == OpKind::Read)
        .expect("the scenario reads");
    let read_response = read.response_time.expect("terminated");
    Ok(Theorem1Replay {
        e1_linearizable: check_linearizable(&e1)?,
        e2_linearizable: check_linearizable(&e2)?,
        e1_loss_free: is_loss_free(&e1)?,
        e2_loss_free: is_loss_free(&e2)?,
        read_response,
        first_delivery: e2.deliveries().iter().map(|m| m.time).min(),
        e1,
        e2,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem3Replay {
    #[serde(skip)]
    pub partitioned: History,
    #[serde(skip)]
    pub healed: History,
    /// The value written on one side of the partition.
    pub value: i64,
    /// The process on the other side.
    pub reader: ProcessId,
    pub eventual: Verdict,
    pub opportunistic: Verdict,
    pub healed_eventual: Verdict,
}

impl Theorem3Replay {
    pub fn as_expected(&self) -> bool {
        let missing = self
            .eventual
            .counterexample
            .as_ref()
            .is_some_and(|c| c.value == Some(self.value) && c.process == Some(self.reader));
        !self.eventual.satisfied
            && missing
            && self.opportunistic.satisfied
            && self.healed_eventual.satisfied
    }
}

pub fn replay_theorem_3() -> Result<Theorem3Replay, ExperimentError> {
    let spec = load(THEOREM3_FOREVER)?;
    let write = &spec.workload[0];
    let value = write.value.expect("the scenario writes");
    let reader = ProcessId(1 - write.process);
    let partitioned = run(&spec)?;
    let healed = run(&load(THEOREM3_HEALED)?)?;
    Ok(Theorem3Replay {
        value,
        reader,
        eventual: check_eventual(&partitioned)?,
        opportunistic: opportunistic::<CheckError, _>(check_eventual, &partitioned)?,
        healed_eventual: check_eventual(&healed)?,
        partitioned,
        healed,
    })
}
