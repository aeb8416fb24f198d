//! Measured latencies held up against known lower bounds. A report that
//! holds only shows the implementation is consistent with the bound; it
//! does not prove the bound. One that fails points at a simulator or
//! measurement bug.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{run, steady_state_latencies, ExperimentError, Workload};
use crate::histories::OpKind;
use crate::registers::{Algorithm, LeaderVariant};
use crate::simnet::DelayModel;

/// Worst-case ABD latency under delays drawn from `[d - u, d]`, against the
/// `u/2` bound on linearizable operations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttiyaWelchReport {
    pub d: u64,
    pub u: u64,
    pub seed: u64,
    pub bound: f64,
    pub max_read: u64,
    pub max_write: u64,
    pub max_latency: u64,
    pub holds: bool,
}

impl fmt::Display for AttiyaWelchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "abd d={} u={} seed={}: max latency {} (read {}, write {}) {} u/2 = {}; {}",
            self.d,
            self.u,
            self.seed,
            self.max_latency,
            self.max_read,
            self.max_write,
            if self.holds { ">=" } else { "<" },
            self.bound,
            if self.holds {
                "consistent with the lower bound"
            } else {
                "INCONSISTENT with the lower bound"
            }
        )
    }
}

pub fn bound_check_attiya_welch(
    d: u64,
    u: u64,
    seed: u64,
) -> Result<AttiyaWelchReport, ExperimentError> {
    let spec = Workload::standard().scenario(Algorithm::Abd, DelayModel::uniform(d, u), seed);
    let h = run(&spec)?;
    let max = |op| steady_state_latencies(&h, op).into_iter().max();
    let max_read = max(OpKind::Read).ok_or(ExperimentError::NoSamples { op: OpKind::Read })?;
    let max_write = max(OpKind::Write).ok_or(ExperimentError::NoSamples { op: OpKind::Write })?;
    let max_latency = max_read.max(max_write);
    let bound = u as f64 / 2.0;
    Ok(AttiyaWelchReport {
        d,
        u,
        seed,
        bound,
        max_read,
        max_write,
        max_latency,
        holds: max_latency as f64 >= bound,
    })
}

/// Read and write latencies of a leader-based sequentially consistent
/// register against `|r| + |w| >= d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiptonSandbergReport {
    pub variant: String,
    pub d: u64,
    pub seed: u64,
    pub min_read: u64,
    pub max_read: u64,
    pub min_write: u64,
    pub max_write: u64,
    /// Number of (read, write) latency pairs compared.
    pub pairs: usize,
    pub holds: bool,
}

impl fmt::Display for LiptonSandbergReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} d={}: |r| in [{}, {}], |w| in [{}, {}]; min |r| + min |w| = {} {} d over {} pairs",
            self.variant,
            self.d,
            self.min_read,
            self.max_read,
            self.min_write,
            self.max_write,
            self.min_read + self.min_write,
            if self.holds { ">=" } else { "<" },
            self.pairs
        )
    }
}

/// Clients run on every process except the leader, whose operations are
/// local and so say nothing about the network.
pub fn bound_check_lipton_sandberg(
    variant: LeaderVariant,
    d: u64,
    seed: u64,
) -> Result<LiptonSandbergReport, ExperimentError> {
    let algorithm = match variant {
        LeaderVariant::FastRead => Algorithm::LeaderFastRead,
        LeaderVariant::FastWrite => Algorithm::LeaderFastWrite,
    };
    let spec = Workload::alternating(3, &[1, 2], 6)
        .scenario(algorithm, DelayModel::fixed(d), seed)
        .leader(0);
    let h = run(&spec)?;
    let reads = steady_state_latencies(&h, OpKind::Read);
    let writes = steady_state_latencies(&h, OpKind::Write);
    let (Some(&min_read), Some(&max_read)) = (reads.iter().min(), reads.iter().max()) else {
        return Err(ExperimentError::NoSamples { op: OpKind::Read });
    };
    let (Some(&min_write), Some(&max_write)) = (writes.iter().min(), writes.iter().max()) else {
        return Err(ExperimentError::NoSamples { op: OpKind::Write });
    };
    Ok(LiptonSandbergReport {
        variant: algorithm.name().to_string(),
        d,
        seed,
        min_read,
        max_read,
        min_write,
        max_write,
        pairs: reads.len() * writes.len(),
        // every pair clears the bound iff the smallest pair does
        holds: min_read + min_write >= d,
    })
}
