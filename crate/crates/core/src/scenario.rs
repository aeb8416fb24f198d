//! Declarative scenario files.
//!
//! ```json
//! {
//!   "processes": { "count": 3, "sites": ["east", "east", "west"] },
//!   "algorithm": { "name": "abd", "leader": 0, "timeout": 100, "retry_interval": 50 },
//!   "delay": { "kind": "uniform", "d": 100, "u": 80 },
//!   "faults": [
//!     { "kind": "partition", "groups": [[0], [1, 2]], "start": 0, "end": "forever", "retransmit": true },
//!     { "kind": "drop", "probability": 0.2, "start": 0, "end": 500 }
//!   ],
//!   "workload": [
//!     { "time": 0, "process": 0, "op": "write", "value": 1 },
//!     { "time": 50, "process": 1, "op": "read" }
//!   ],
//!   "probes": false,
//!   "seed": 7,
//!   "horizon": 100000
//! }
//! ```
//!
//! `sites` is optional (all processes share one site). `leader` defaults to
//! process 0, `timeout` to 10·d and `retry_interval` to 5·d, where d is the
//! nominal delay (`d_remote` for topology models). Written values must be
//! non-zero (0 is the register's initial value) and distinct.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::histories::{OpKind, Operation};
use crate::registers::{Algorithm, AlgorithmParams, Replica, Value};
use crate::simnet::{
    DelayModel, FaultSpec, InvalidSpec, Invocation, ProcessId, SimConfig, Simulator, SpecIssue,
    VirtualTime,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessesSection {
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_interval: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadEntry {
    pub time: u64,
    pub process: usize,
    pub op: OpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub processes: ProcessesSection,
    pub algorithm: AlgorithmSection,
    pub delay: DelayModel,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
    #[serde(default)]
    pub workload: Vec<WorkloadEntry>,
    #[serde(default)]
    pub probes: bool,
    pub seed: Option<u64>,
    pub horizon: u64,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Invalid(#[from] InvalidSpec),
}

impl ScenarioSpec {
    /// A fault-free scenario with an empty workload, seed 0.
    pub fn new(algorithm: Algorithm, processes: usize, delay: DelayModel) -> Self {
        ScenarioSpec {
            processes: ProcessesSection {
                count: processes,
                sites: None,
            },
            algorithm: AlgorithmSection {
                name: algorithm.name().to_string(),
                leader: None,
                timeout: None,
                retry_interval: None,
            },
            delay,
            faults: Vec::new(),
            workload: Vec::new(),
            probes: false,
            seed: Some(0),
            horizon: 1_000_000,
        }
    }

    pub fn write(mut self, time: u64, process: usize, value: i64) -> Self {
        self.workload.push(WorkloadEntry {
            time,
            process,
            op: OpKind::Write,
            value: Some(value),
        });
        self
    }

    pub fn read(mut self, time: u64, process: usize) -> Self {
        self.workload.push(WorkloadEntry {
            time,
            process,
            op: OpKind::Read,
            value: None,
        });
        self
    }

    pub fn fault(mut self, fault: FaultSpec) -> Self {
        self.faults.push(fault);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn probes(mut self, probes: bool) -> Self {
        self.probes = probes;
        self
    }

    pub fn sites(mut self, sites: &[&str]) -> Self {
        self.processes.sites = Some(sites.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn leader(mut self, leader: usize) -> Self {
        self.algorithm.leader = Some(leader);
        self
    }

    pub fn retry_interval(mut self, ticks: u64) -> Self {
        self.algorithm.retry_interval = Some(ticks);
        self
    }

    pub fn from_json(text: &str) -> Result<ScenarioSpec, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn algorithm(&self) -> Option<Algorithm> {
        Algorithm::from_name(&self.algorithm.name)
    }

    pub fn params(&self) -> AlgorithmParams {
        let d = self.delay.nominal().0;
        AlgorithmParams {
            leader: ProcessId(self.algorithm.leader.unwrap_or(0)),
            timeout: self.algorithm.timeout.unwrap_or((10 * d).max(1)),
        }
    }

    /// Every problem with the scenario, each tagged with the offending field.
    pub fn validate(&self) -> Vec<SpecIssue> {
        let mut issues = Vec::new();
        let n = self.processes.count;
        if n == 0 {
            issues.push(SpecIssue::new(
                "processes.count",
                "need at least one process",
            ));
        }
        if let Some(sites) = &self.processes.sites {
            if sites.len() != n {
                issues.push(SpecIssue::new(
                    "processes.sites",
                    format!("{} sites listed for {} processes", sites.len(), n),
                ));
            }
        }
        match self.algorithm() {
            None => issues.push(SpecIssue::new(
                "algorithm.name",
                format!(
                    "unknown algorithm {:?}; valid names: {}",
                    self.algorithm.name,
                    Algorithm::names().join(", ")
                ),
            )),
            Some(_) => {
                if let Some(l) = self.algorithm.leader {
                    if l >= n {
                        issues.push(SpecIssue::new(
                            "algorithm.leader",
                            format!("leader {l} is not one of the {n} processes"),
                        ));
                    }
                }
            }
        }
        if self.algorithm.retry_interval == Some(0) {
            issues.push(SpecIssue::new(
                "algorithm.retry_interval",
                "must be positive",
            ));
        }
        if self.algorithm.timeout == Some(0) {
            issues.push(SpecIssue::new("algorithm.timeout", "must be positive"));
        }
        for (field, msg) in self.delay.problems() {
            issues.push(SpecIssue::new(format!("delay.{field}"), msg));
        }
        for (i, f) in self.faults.iter().enumerate() {
            for (field, msg) in f.problems(n) {
                issues.push(SpecIssue::new(format!("faults[{i}].{field}"), msg));
            }
        }
        let mut written = BTreeSet::new();
        for (i, w) in self.workload.iter().enumerate() {
            if w.process >= n {
                issues.push(SpecIssue::new(
                    format!("workload[{i}].process"),
                    format!("unknown process {}", w.process),
                ));
            }
            if w.time > self.horizon {
                issues.push(SpecIssue::new(
                    format!("workload[{i}].time"),
                    format!("time {} is past the horizon {}", w.time, self.horizon),
                ));
            }
            match (w.op, w.value) {
                (OpKind::Write, None) => issues.push(SpecIssue::new(
                    format!("workload[{i}].value"),
                    "a write needs a value",
                )),
                (OpKind::Write, Some(v)) => {
                    if v == Value::INITIAL_PAYLOAD {
                        issues.push(SpecIssue::new(
                            format!("workload[{i}].value"),
                            "0 is reserved for the initial register value",
                        ));
                    } else if !written.insert(v) {
                        issues.push(SpecIssue::new(
                            format!("workload[{i}].value"),
                            format!("value {v} is written more than once"),
                        ));
                    }
                }
                (OpKind::Read, Some(_)) => issues.push(SpecIssue::new(
                    format!("workload[{i}].value"),
                    "a read takes no value",
                )),
                (OpKind::Read, None) => {}
            }
        }
        if self.seed.is_none() {
            issues.push(SpecIssue::new("seed", "a seed is required"));
        }
        if self.horizon == 0 {
            issues.push(SpecIssue::new("horizon", "horizon must be positive"));
        }
        issues
    }

    pub fn sim_config(&self) -> SimConfig {
        let n = self.processes.count;
        let mut cfg = SimConfig::new(n, self.delay.clone());
        if let Some(sites) = &self.processes.sites {
            cfg.sites = sites.clone();
        }
        if let Some(r) = self.algorithm.retry_interval {
            cfg.retry_interval = VirtualTime(r);
        }
        cfg.faults = self.faults.clone();
        cfg.horizon = VirtualTime(self.horizon);
        cfg.seed = self.seed.unwrap_or_default();
        cfg.probes = self.probes;
        cfg.algorithm = Some(self.algorithm.name.clone());
        cfg
    }

    pub fn invocations(&self) -> Vec<Invocation> {
        self.workload
            .iter()
            .map(|w| Invocation {
                time: VirtualTime(w.time),
                process: ProcessId(w.process),
                op: match w.value {
                    Some(v) if w.op == OpKind::Write => Operation::Write(v),
                    _ => Operation::Read,
                },
            })
            .collect()
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} x{} ({} ops, {} faults, ",
            self.algorithm.name,
            self.processes.count,
            self.workload.len(),
            self.faults.len(),
        )?;
        match self.seed {
            Some(s) => write!(f, "seed {s})"),
            None => f.write_str("no seed)"),
        }
    }
}

/// Constructs the simulator described by `spec`: one replica per process,
/// the workload queued as invoke events, the RNG seeded from `spec.seed`.
pub fn build_sim(spec: &ScenarioSpec) -> Result<Simulator<Replica>, InvalidSpec> {
    let issues = spec.validate();
    if !issues.is_empty() {
        return Err(InvalidSpec(issues));
    }
    let algorithm = spec.algorithm().expect("validated");
    let replicas = Replica::group(algorithm, spec.params(), spec.processes.count);
    Simulator::new(spec.sim_config(), replicas, &spec.invocations())
}

/// Reads and validates a scenario file, reporting every problem at once.
pub fn validate_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let spec = ScenarioSpec::from_json(&text)?;
    let issues = spec.validate();
    if issues.is_empty() {
        Ok(spec)
    } else {
        Err(InvalidSpec(issues).into())
    }
}
