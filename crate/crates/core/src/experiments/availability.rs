use serde::{Deserialize, Serialize};

use crate::histories::History;
use crate::simnet::VirtualTime;

pub const MIDRUN_PARTITION_ABD: &str = include_str!("../../scenarios/midrun_partition_abd.json");
pub const MIDRUN_PARTITION_CAUSAL: &str =
    include_str!("../../scenarios/midrun_partition_causal.json");

/// Fraction of requests answered within a latency bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityReport {
    pub latency_bound: u64,
    /// Requests issued in `[start, end)` are counted.
    pub window: [VirtualTime; 2],
    pub invoked: usize,
    pub within_bound: usize,
    pub fraction_within_bound: f64,
}

/// Availability over every request in the history. Probe reads are not
/// client requests and are ignored.
pub fn availability_report(h: &History, sla_bound: u64) -> AvailabilityReport {
    availability_window(h, sla_bound, VirtualTime::ZERO, h.meta().end_time + 1)
}

/// Latency is measured from when the client asked, so time spent queued
/// behind an earlier blocked request counts. Requests that never completed
/// are misses. An empty window is fully available.
pub fn availability_window(
    h: &History,
    sla_bound: u64,
    start: VirtualTime,
    end: VirtualTime,
) -> AvailabilityReport {
    let ops: Vec<_> = h
        .ops()
        .iter()
        .filter(|o| !o.probe && o.requested_time >= start && o.requested_time < end)
        .collect();
    let within_bound = ops
        .iter()
        .filter(|o| {
            o.response_time
                .is_some_and(|r| r - o.requested_time <= sla_bound)
        })
        .count();
    let fraction_within_bound = if ops.is_empty() {
        1.0
    } else {
        within_bound as f64 / ops.len() as f64
    };
    AvailabilityReport {
        latency_bound: sla_bound,
        window: [start, end],
        invoked: ops.len(),
        within_bound,
        fraction_within_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::run;
    use crate::histories::HistoryBuilder;
    use crate::scenario::ScenarioSpec;

    #[test]
    fn pending_ops_miss() {
        let mut b = HistoryBuilder::new(2);
        b.write(0, 1, 0, 10);
        b.read_pending(1, 5);
        let r = availability_report(&b.build(), 100);
        assert_eq!((r.invoked, r.within_bound), (2, 1));
        assert_eq!(r.fraction_within_bound, 0.5);
    }

    #[test]
    fn bound_is_inclusive_and_window_half_open() {
        let mut b = HistoryBuilder::new(1);
        b.write(0, 1, 0, 500);
        b.write(0, 2, 600, 1101);
        let h = b.build();
        let r = availability_window(&h, 500, VirtualTime(0), VirtualTime(600));
        assert_eq!((r.invoked, r.within_bound), (1, 1));
        assert_eq!(availability_report(&h, 500).fraction_within_bound, 0.5);
    }

    #[test]
    fn empty_is_available() {
        let r = availability_report(&HistoryBuilder::new(1).build(), 1);
        assert_eq!(r.fraction_within_bound, 1.0);
    }

    #[test]
    fn midrun_partition() {
        let abd = run(&ScenarioSpec::from_json(MIDRUN_PARTITION_ABD).unwrap()).unwrap();
        let causal = run(&ScenarioSpec::from_json(MIDRUN_PARTITION_CAUSAL).unwrap()).unwrap();
        let a = availability_report(&abd, 500);
        let c = availability_report(&causal, 500);
        assert_eq!(c.fraction_within_bound, 1.0);
        assert!(a.fraction_within_bound < 1.0);
        assert_eq!((a.invoked, a.within_bound), (45, 41));
    }
}
