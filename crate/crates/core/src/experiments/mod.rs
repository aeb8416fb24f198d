//! Latency sweeps, lower-bound checks, availability and the constructed
//! executions behind the impossibility results.
//!
//! A sweep runs one fault-free simulation per network delay `d`, measures
//! `response - invoke` for every operation past the warm-up, and fits the
//! worst case against `d` by least squares. An operation kind whose worst
//! latency does not move at all is [`Classification::DelayIndependent`]; one
//! whose slope is at least 0.5 is [`Classification::DelaySensitive`].
//! Anything in between is reported as an error rather than guessed at.

mod availability;
mod bounds;
mod theorems;
mod topology;

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkers::CheckError;
use crate::histories::{History, HistoryError, OpKind, OpRecord};
use crate::registers::Algorithm;
use crate::scenario::{build_sim, ScenarioError, ScenarioSpec, WorkloadEntry};
use crate::simnet::{DelayModel, InvalidSpec, NonTerminating, ProcessId};

pub use availability::{
    availability_report, availability_window, AvailabilityReport, MIDRUN_PARTITION_ABD,
    MIDRUN_PARTITION_CAUSAL,
};
pub use bounds::{
    bound_check_attiya_welch, bound_check_lipton_sandberg, AttiyaWelchReport, LiptonSandbergReport,
};
pub use theorems::{
    replay_theorem_1, replay_theorem_3, Theorem1Replay, Theorem3Replay, THEOREM1_E1, THEOREM1_E2,
    THEOREM3_FOREVER, THEOREM3_HEALED,
};
pub use topology::{topology_experiment, TopologyReport, D_LOCAL, D_REMOTE_VALUES};

/// Slope below which (together with identical maxima) latency does not
/// depend on `d`.
pub const INDEPENDENT_SLOPE: f64 = 0.05;
/// Slope at or above which latency grows with `d`.
pub const SENSITIVE_SLOPE: f64 = 0.5;
/// Operations per process discarded before measuring.
pub const WARM_UP: usize = 2;

/// Delays swept when none are given.
pub const DEFAULT_DELAYS: [u64; 3] = [10, 50, 100];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("a sweep needs at least 3 distinct delays, got {0}")]
    TooFewDelays(usize),
    #[error("no steady-state {op:?} operations to measure")]
    NoSamples { op: OpKind },
    #[error(
        "{op:?} latency slope {slope:.3} lies between the independent and sensitive thresholds"
    )]
    Unclassifiable { op: OpKind, slope: f64 },
    #[error("sweeps must be fault-free")]
    FaultsNotAllowed,
    #[error(transparent)]
    NonTerminating(#[from] NonTerminating),
    #[error(transparent)]
    Invalid(#[from] InvalidSpec),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    History(#[from] HistoryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "DELAY_SENSITIVE")]
    DelaySensitive,
    #[serde(rename = "DELAY_INDEPENDENT")]
    DelayIndependent,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::DelaySensitive => "DELAY_SENSITIVE",
            Classification::DelayIndependent => "DELAY_INDEPENDENT",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub min: u64,
    pub median: u64,
    pub max: u64,
}

impl LatencyStats {
    /// `None` for an empty sample. The median is the lower median.
    pub fn of(samples: &[u64]) -> Option<LatencyStats> {
        let mut s = samples.to_vec();
        s.sort_unstable();
        Some(LatencyStats {
            min: *s.first()?,
            median: s[(s.len() - 1) / 2],
            max: *s.last()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub d: u64,
    pub read: LatencyStats,
    pub write: LatencyStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub classification: Classification,
    /// Least-squares slope of max latency against `d`.
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub algorithm: String,
    pub seed: u64,
    pub rows: Vec<LatencyRow>,
    pub read: Fit,
    pub write: Fit,
}

impl LatencyReport {
    pub const CSV_HEADER: &'static str = "algorithm,d,op,min,median,max,classification";

    pub fn fit(&self, op: OpKind) -> &Fit {
        match op {
            OpKind::Read => &self.read,
            OpKind::Write => &self.write,
        }
    }

    /// Max latency per row for one op kind, in sweep order.
    pub fn maxima(&self, op: OpKind) -> Vec<u64> {
        self.rows.iter().map(|r| row_stats(r, op).max).collect()
    }

    /// One line per (d, op kind), reads first within each d.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            for op in [OpKind::Read, OpKind::Write] {
                let s = row_stats(row, op);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    self.algorithm,
                    row.d,
                    op_name(op),
                    s.min,
                    s.median,
                    s.max,
                    self.fit(op).classification
                )
                .unwrap();
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn row_stats(row: &LatencyRow, op: OpKind) -> LatencyStats {
    match op {
        OpKind::Read => row.read,
        OpKind::Write => row.write,
    }
}

pub(crate) fn op_name(op: OpKind) -> &'static str {
    match op {
        OpKind::Read => "read",
        OpKind::Write => "write",
    }
}

/// A workload to replay at every point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub processes: usize,
    pub entries: Vec<WorkloadEntry>,
}

impl Workload {
    /// Every listed client issues `ops` operations, alternating write and
    /// read, one every 1000 ticks. Clients are offset by one tick so that
    /// their operations overlap.
    pub fn alternating(processes: usize, clients: &[usize], ops: usize) -> Workload {
        let mut entries = Vec::new();
        for i in 0..ops {
            for &p in clients {
                let time = i as u64 * 1000 + p as u64;
                let (op, value) = if i % 2 == 0 {
                    (OpKind::Write, Some((p * 1000 + i + 1) as i64))
                } else {
                    (OpKind::Read, None)
                };
                entries.push(WorkloadEntry {
                    time,
                    process: p,
                    op,
                    value,
                });
            }
        }
        Workload { processes, entries }
    }

    /// Three processes, six operations each.
    pub fn standard() -> Workload {
        Workload::alternating(3, &[0, 1, 2], 6)
    }

    pub(crate) fn scenario(
        &self,
        algorithm: Algorithm,
        delay: DelayModel,
        seed: u64,
    ) -> ScenarioSpec {
        let mut spec = ScenarioSpec::new(algorithm, self.processes, delay).seed(seed);
        spec.workload = self.entries.clone();
        spec.horizon = self.entries.iter().map(|e| e.time).max().unwrap_or(0) + 100_000;
        spec
    }
}

/// Latencies of the operations that count: not probes, not within the first
/// [`WARM_UP`] operations of their process.
pub fn steady_state_latencies(h: &History, op: OpKind) -> Vec<u64> {
    steady_state_ops(h)
        .filter(|o| o.kind == op)
        .filter_map(OpRecord::latency)
        .collect()
}

pub(crate) fn steady_state_ops(h: &History) -> impl Iterator<Item = &OpRecord> {
    let mut seen = vec![0usize; h.processes()];
    h.ops().iter().filter(move |o| {
        if o.probe {
            return false;
        }
        let ProcessId(p) = o.process;
        seen[p] += 1;
        seen[p] > WARM_UP
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn classify(op: OpKind, ds: &[u64], maxima: &[u64]) -> Result<Fit, ExperimentError> {
    let xs: Vec<f64> = ds.iter().map(|&d| d as f64).collect();
    let ys: Vec<f64> = maxima.iter().map(|&m| m as f64).collect();
    let slope = slope(&xs, &ys);
    let flat = maxima.windows(2).all(|w| w[0] == w[1]);
    let classification = if flat && slope < INDEPENDENT_SLOPE {
        Classification::DelayIndependent
    } else if slope >= SENSITIVE_SLOPE {
        Classification::DelaySensitive
    } else {
        return Err(ExperimentError::Unclassifiable { op, slope });
    };
    Ok(Fit {
        classification,
        slope,
    })
}

/// Runs one simulation per delay with fixed delay `d`, in parallel.
pub fn latency_sweep(
    algorithm: Algorithm,
    d_values: &[u64],
    workload: &Workload,
    seed: u64,
) -> Result<LatencyReport, ExperimentError> {
    sweep_scenarios(algorithm.name(), seed, d_values, |d| {
        workload.scenario(algorithm, DelayModel::fixed(d), seed)
    })
}

/// Sweeps an arbitrary delay parameter: `scenario(x)` describes the run for
/// each value `x` in `xs`, and rows are keyed by `x`.
pub fn sweep_scenarios<F>(
    name: &str,
    seed: u64,
    xs: &[u64],
    scenario: F,
) -> Result<LatencyReport, ExperimentError>
where
    F: Fn(u64) -> ScenarioSpec + Sync,
{
    let mut distinct = xs.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(ExperimentError::TooFewDelays(distinct.len()));
    }
    let specs: Vec<ScenarioSpec> = xs.iter().map(|&x| scenario(x)).collect();
    if specs.iter().any(|s| !s.faults.is_empty()) {
        return Err(ExperimentError::FaultsNotAllowed);
    }
    let histories: Vec<Result<History, ExperimentError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| scope.spawn(move || run(spec)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });

    let mut rows = Vec::with_capacity(xs.len());
    for (&d, history) in xs.iter().zip(histories) {
        let history = history?;
        let stats = |op| {
            LatencyStats::of(&steady_state_latencies(&history, op))
                .ok_or(ExperimentError::NoSamples { op })
        };
        rows.push(LatencyRow {
            d,
            read: stats(OpKind::Read)?,
            write: stats(OpKind::Write)?,
        });
    }
    let maxima = |op| {
        rows.iter()
            .map(|r| row_stats(r, op).max)
            .collect::<Vec<_>>()
    };
    let read = classify(OpKind::Read, xs, &maxima(OpKind::Read))?;
    let write = classify(OpKind::Write, xs, &maxima(OpKind::Write))?;
    Ok(LatencyReport {
        algorithm: name.to_string(),
        seed,
        rows,
        read,
        write,
    })
}

/// Builds and runs a scenario to quiescence.
pub fn run(spec: &ScenarioSpec) -> Result<History, ExperimentError> {
    Ok(build_sim(spec)?.run_to_quiescence()?)
}
