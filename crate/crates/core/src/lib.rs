//! Deterministic discrete-event simulation of replicated read/write
//! registers over links that can be partitioned, with checkers for
//! linearizability, sequential, causal and eventual consistency, and
//! experiments measuring how operation latency depends on network delay.
//!
//! ```
//! use partsim::scenario::{build_sim, ScenarioSpec};
//! use partsim::simnet::DelayModel;
//! use partsim::registers::Algorithm;
//! use partsim::checkers::check_linearizable;
//!
//! let spec = ScenarioSpec::new(Algorithm::Abd, 3, DelayModel::fixed(10))
//!     .write(0, 0, 1)
//!     .read(100, 1);
//! let history = build_sim(&spec).unwrap().run_to_quiescence().unwrap();
//! assert!(check_linearizable(&history).unwrap().satisfied);
//! ```

pub mod checkers;
pub mod experiments;
pub mod histories;
pub mod registers;
pub mod scenario;
pub mod simnet;
