use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::{ProcessId, VirtualTime};

/// End of a fault window. `Forever` outlives any horizon, and the run records
/// the resulting loss as permanent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaultEnd {
    At(VirtualTime),
    Forever,
}

impl Serialize for FaultEnd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            FaultEnd::At(t) => s.serialize_u64(t.0),
            FaultEnd::Forever => s.serialize_str("forever"),
        }
    }
}

impl<'de> Deserialize<'de> for FaultEnd {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(t) => Ok(FaultEnd::At(VirtualTime(t))),
            Raw::Str(s) if s == "forever" => Ok(FaultEnd::Forever),
            Raw::Str(s) => Err(de::Error::custom(format!(
                "expected a tick count or \"forever\", got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for FaultEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultEnd::At(t) => write!(f, "{t}"),
            FaultEnd::Forever => f.write_str("forever"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FaultKind {
    /// Transmissions between processes in different groups are dropped.
    /// Processes not named in any group are unaffected.
    Partition { groups: Vec<Vec<ProcessId>> },
    /// Transmissions of messages whose id falls in `ids` (inclusive), or a
    /// random fraction `probability` of all transmissions, are dropped.
    Drop {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ids: Option<[u64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probability: Option<f64>,
    },
}

fn default_true() -> bool {
    true
}

/// A fault active during `[start, end)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    #[serde(flatten)]
    pub kind: FaultKind,
    #[serde(default)]
    pub start: VirtualTime,
    pub end: FaultEnd,
    /// Whether the link layer keeps resending messages this fault drops.
    #[serde(default = "default_true")]
    pub retransmit: bool,
}

impl FaultSpec {
    pub fn partition(groups: Vec<Vec<usize>>, start: u64, end: FaultEnd) -> Self {
        FaultSpec {
            kind: FaultKind::Partition {
                groups: groups
                    .into_iter()
                    .map(|g| g.into_iter().map(ProcessId).collect())
                    .collect(),
            },
            start: VirtualTime(start),
            end,
            retransmit: true,
        }
    }

    pub fn drop_ids(first: u64, last: u64, start: u64, end: FaultEnd) -> Self {
        FaultSpec {
            kind: FaultKind::Drop {
                ids: Some([first, last]),
                probability: None,
            },
            start: VirtualTime(start),
            end,
            retransmit: true,
        }
    }

    pub fn drop_probability(p: f64, start: u64, end: FaultEnd) -> Self {
        FaultSpec {
            kind: FaultKind::Drop {
                ids: None,
                probability: Some(p),
            },
            start: VirtualTime(start),
            end,
            retransmit: true,
        }
    }

    pub fn with_retransmit(mut self, retransmit: bool) -> Self {
        self.retransmit = retransmit;
        self
    }

    pub fn is_active(&self, now: VirtualTime) -> bool {
        self.start <= now
            && match self.end {
                FaultEnd::At(end) => now < end,
                FaultEnd::Forever => true,
            }
    }

    fn group_of(groups: &[Vec<ProcessId>], p: ProcessId) -> Option<usize> {
        groups.iter().position(|g| g.contains(&p))
    }

    /// Drop decision that does not consume randomness.
    fn drops_deterministically(&self, msg_id: u64, from: ProcessId, to: ProcessId) -> bool {
        match &self.kind {
            FaultKind::Partition { groups } => {
                match (Self::group_of(groups, from), Self::group_of(groups, to)) {
                    (Some(a), Some(b)) => a != b,
                    _ => false,
                }
            }
            FaultKind::Drop { ids, probability } => {
                let by_id = ids.is_some_and(|[lo, hi]| (lo..=hi).contains(&msg_id));
                by_id || probability.is_some_and(|p| p >= 1.0)
            }
        }
    }

    /// Whether this fault drops one transmission attempt made at `now`.
    pub(crate) fn drops<R: Rng>(
        &self,
        now: VirtualTime,
        msg_id: u64,
        from: ProcessId,
        to: ProcessId,
        rng: &mut R,
    ) -> bool {
        if !self.is_active(now) {
            return false;
        }
        if self.drops_deterministically(msg_id, from, to) {
            return true;
        }
        match &self.kind {
            FaultKind::Drop {
                probability: Some(p),
                ..
            } if *p > 0.0 => rng.gen_bool(*p),
            _ => false,
        }
    }

    /// True when every future attempt to send this message will be dropped.
    pub(crate) fn blocks_forever(
        &self,
        now: VirtualTime,
        msg_id: u64,
        from: ProcessId,
        to: ProcessId,
    ) -> bool {
        self.end == FaultEnd::Forever
            && self.start <= now
            && self.drops_deterministically(msg_id, from, to)
    }

    /// Validation problems as `(field, message)` pairs.
    pub fn problems(&self, processes: usize) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if let FaultEnd::At(end) = self.end {
            if end <= self.start {
                out.push((
                    "end".to_string(),
                    format!("end {} is not after start {}", end, self.start),
                ));
            }
        }
        match &self.kind {
            FaultKind::Partition { groups } => {
                if groups.len() < 2 {
                    out.push((
                        "groups".to_string(),
                        format!("a partition needs at least 2 groups, got {}", groups.len()),
                    ));
                }
                let mut seen = BTreeSet::new();
                for (gi, group) in groups.iter().enumerate() {
                    if group.is_empty() {
                        out.push((format!("groups[{gi}]"), "group is empty".to_string()));
                    }
                    for p in group {
                        if p.0 >= processes {
                            out.push((
                                format!("groups[{gi}]"),
                                format!("unknown process {} (scenario has {})", p.0, processes),
                            ));
                        }
                        if !seen.insert(*p) {
                            out.push((
                                format!("groups[{gi}]"),
                                format!("process {} appears in more than one group", p.0),
                            ));
                        }
                    }
                }
            }
            FaultKind::Drop { ids, probability } => {
                if ids.is_some() == probability.is_some() {
                    out.push((
                        "kind".to_string(),
                        "a drop fault needs exactly one of `ids` or `probability`".to_string(),
                    ));
                }
                if let Some([lo, hi]) = ids {
                    if lo > hi {
                        out.push(("ids".to_string(), format!("empty id range [{lo}, {hi}]")));
                    }
                }
                if let Some(p) = probability {
                    if !(0.0..=1.0).contains(p) {
                        out.push((
                            "probability".to_string(),
                            format!("probability {p} outside [0, 1]"),
                        ));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn end_serializes_as_number_or_forever() {
        let f = FaultSpec::partition(vec![vec![0], vec![1]], 0, FaultEnd::Forever);
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"end\":\"forever\""), "{json}");
        let back: FaultSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);

        let g: FaultSpec =
            serde_json::from_str(r#"{"kind":"drop","ids":[0,3],"start":5,"end":10}"#).unwrap();
        assert_eq!(g.end, FaultEnd::At(VirtualTime(10)));
        assert!(g.retransmit);
        assert!(
            serde_json::from_str::<FaultSpec>(r#"{"kind":"drop","ids":[0,3],"end":"later"}"#)
                .is_err()
        );
    }

    #[test]
    fn partition_validation() {
        let ok = FaultSpec::partition(vec![vec![0], vec![1, 2]], 0, FaultEnd::Forever);
        assert!(ok.problems(3).is_empty());
        let overlap = FaultSpec::partition(vec![vec![0], vec![0]], 0, FaultEnd::Forever);
        assert!(!overlap.problems(2).is_empty());
        let empty = FaultSpec::partition(vec![vec![0, 1], vec![]], 0, FaultEnd::Forever);
        assert!(empty.problems(2).iter().any(|(f, _)| f == "groups[1]"));
        let unknown = FaultSpec::partition(vec![vec![0], vec![7]], 0, FaultEnd::Forever);
        assert!(!unknown.problems(2).is_empty());
        let backwards =
            FaultSpec::partition(vec![vec![0], vec![1]], 10, FaultEnd::At(VirtualTime(10)));
        assert!(backwards.problems(2).iter().any(|(f, _)| f == "end"));
    }

    #[test]
    fn window_is_half_open() {
        let f = FaultSpec::partition(vec![vec![0], vec![1]], 100, FaultEnd::At(VirtualTime(200)));
        assert!(!f.is_active(VirtualTime(99)));
        assert!(f.is_active(VirtualTime(100)));
        assert!(f.is_active(VirtualTime(199)));
        assert!(!f.is_active(VirtualTime(200)));
    }

    #[test]
    fn unlisted_processes_unaffected() {
        let f = FaultSpec::partition(vec![vec![0], vec![1]], 0, FaultEnd::Forever);
        assert!(f.drops_deterministically(0, ProcessId(0), ProcessId(1)));
        assert!(!f.drops_deterministically(0, ProcessId(0), ProcessId(2)));
        assert!(f.blocks_forever(VirtualTime(5), 0, ProcessId(1), ProcessId(0)));
    }
}
