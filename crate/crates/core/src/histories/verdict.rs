use serde::{Deserialize, Serialize};

use crate::simnet::ProcessId;

/// Evidence that a property holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// A legal total order of operation ids.
    Serialization { order: Vec<u64> },
    /// Satisfied only because the execution is partitioned.
    Partitioned,
    /// Every probe read returned exactly these written values.
    Converged { values: Vec<i64> },
    /// Every read contained all of its causal predecessors.
    CausallyClosed { reads: usize },
}

/// Minimal explanation of a violation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub reason: String,
    /// Operations involved, most relevant first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ops: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessId>,
}

impl Counterexample {
    pub fn new(reason: impl Into<String>) -> Self {
        Counterexample {
            reason: reason.into(),
            ops: Vec::new(),
            value: None,
            process: None,
        }
    }

    pub fn ops(mut self, ops: impl IntoIterator<Item = u64>) -> Self {
        self.ops = ops.into_iter().collect();
        self
    }

    pub fn value(mut self, v: i64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn process(mut self, p: ProcessId) -> Self {
        self.process = Some(p);
        self
    }
}

/// Checker output. Exactly one of `witness` / `counterexample` is set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub satisfied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl Verdict {
    pub fn satisfied(witness: Witness) -> Self {
        Verdict {
            satisfied: true,
            witness: Some(witness),
            counterexample: None,
        }
    }

    pub fn violated(counterexample: Counterexample) -> Self {
        Verdict {
            satisfied: false,
            witness: None,
            counterexample: Some(counterexample),
        }
    }
}
