//! Deterministic discrete-event simulation of processes talking over
//! partitionable links.
//!
//! Links never duplicate or invent messages but may drop any number of them.
//! Drops come from [`FaultSpec`]s; a dropped message is either lost or resent
//! by the link layer on a fixed retry interval. Events are processed in
//! strict `(time, seq)` order and all randomness comes from one seeded
//! ChaCha stream, so identical inputs give identical histories.

mod delay;
mod fault;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use delay::DelayModel;
pub use fault::{FaultEnd, FaultKind, FaultSpec};

use crate::histories::{FaultEvent, History, Meta, OpOutput, Operation, Record};
use crate::registers::Value;

/// Simulated time in integer microseconds.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VirtualTime(pub u64);

impl VirtualTime {
    pub const ZERO: VirtualTime = VirtualTime(0);
}

impl Add<u64> for VirtualTime {
    type Output = VirtualTime;
    fn add(self, rhs: u64) -> VirtualTime {
        VirtualTime(self.0.saturating_add(rhs))
    }
}

impl Add for VirtualTime {
    type Output = VirtualTime;
    fn add(self, rhs: VirtualTime) -> VirtualTime {
        self + rhs.0
    }
}

impl Sub for VirtualTime {
    type Output = u64;
    fn sub(self, rhs: VirtualTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for VirtualTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ProcessId(pub usize);

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message<M> {
    pub id: u64,
    pub sender: ProcessId,
    pub receiver: ProcessId,
    pub payload: M,
    pub send_time: VirtualTime,
    pub delivery_time: Option<VirtualTime>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// A workload operation arrives at its process.
    Invoke {
        process: ProcessId,
        op: Operation,
        probe: bool,
    },
    Deliver {
        msg: u64,
    },
    /// Link-layer resend of a previously dropped message.
    Retransmit {
        msg: u64,
    },
    Timer {
        process: ProcessId,
        timer: u64,
    },
    /// The process finished an operation and has more queued.
    Resume {
        process: ProcessId,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub time: VirtualTime,
    pub seq: u64,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Dispatched(Event),
    Quiescent,
}

/// A scheduled client operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Invocation {
    pub time: VirtualTime,
    pub process: ProcessId,
    pub op: Operation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecIssue {
    pub path: String,
    pub message: String,
}

impl SpecIssue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SpecIssue {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for SpecIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid scenario: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidSpec(pub Vec<SpecIssue>);

/// Some operation was still outstanding when the run went quiescent.
#[derive(Debug, Error)]
#[error("non-terminating algorithm: operation(s) {pending:?} never completed")]
pub struct NonTerminating {
    pub history: Box<History>,
    pub pending: Vec<u64>,
}

/// A replica's view of the simulator while one of its handlers runs.
pub struct Context<'a, M> {
    me: ProcessId,
    processes: usize,
    local_time: VirtualTime,
    actions: &'a mut Vec<Action<M>>,
}

#[derive(Debug)]
enum Action<M> {
    Send { to: ProcessId, msg: M },
    Timer { after: u64, id: u64 },
    Complete(OpOutput),
    Applied(Value),
}

impl<M> Action<M> {
    fn map<N>(self, wrap: &impl Fn(M) -> N) -> Action<N> {
        match self {
            Action::Send { to, msg } => Action::Send { to, msg: wrap(msg) },
            Action::Timer { after, id } => Action::Timer { after, id },
            Action::Complete(o) => Action::Complete(o),
            Action::Applied(v) => Action::Applied(v),
        }
    }
}

impl<'a, M> Context<'a, M> {
    pub fn me(&self) -> ProcessId {
        self.me
    }

    pub fn processes(&self) -> usize {
        self.processes
    }

    /// This process's clock: global time plus a constant per-process skew.
    pub fn local_time(&self) -> VirtualTime {
        self.local_time
    }

    /// Everyone except this process, in id order.
    pub fn peers(&self) -> impl Iterator<Item = ProcessId> {
        let me = self.me;
        (0..self.processes).map(ProcessId).filter(move |p| *p != me)
    }

    pub fn send(&mut self, to: ProcessId, msg: M) {
        self.actions.push(Action::Send { to, msg });
    }

    pub fn broadcast(&mut self, msg: M)
    where
        M: Clone,
    {
        for p in self.peers() {
            self.actions.push(Action::Send {
                to: p,
                msg: msg.clone(),
            });
        }
    }

    /// Fires `on_timer(id)` after `after` ticks.
    pub fn set_timer(&mut self, after: u64, id: u64) {
        self.actions.push(Action::Timer { after, id });
    }

    /// Completes the process's outstanding operation.
    pub fn complete(&mut self, output: OpOutput) {
        self.actions.push(Action::Complete(output));
    }

    /// Records that a value written elsewhere became visible here.
    pub fn applied(&mut self, value: Value) {
        self.actions.push(Action::Applied(value));
    }

    /// Runs `f` against a context with a different message type whose sends
    /// are wrapped back into `M`.
    pub fn scoped<N>(&mut self, wrap: impl Fn(N) -> M, f: impl FnOnce(&mut Context<'_, N>)) {
        let mut inner = Vec::new();
        let mut ctx = Context {
            me: self.me,
            processes: self.processes,
            local_time: self.local_time,
            actions: &mut inner,
        };
        f(&mut ctx);
        self.actions.extend(inner.into_iter().map(|a| a.map(&wrap)));
    }
}

/// A process's event handlers.
pub trait Node {
    type Msg: Clone + fmt::Debug + Serialize;

    /// Start a client operation. At most one is outstanding per process.
    fn on_invoke(&mut self, op: Operation, ctx: &mut Context<'_, Self::Msg>);

    fn on_message(&mut self, from: ProcessId, msg: Self::Msg, ctx: &mut Context<'_, Self::Msg>);

    fn on_timer(&mut self, _timer: u64, _ctx: &mut Context<'_, Self::Msg>) {}
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub processes: usize,
    /// Datacenter label per process; only the topology delay model reads it.
    pub sites: Vec<String>,
    pub delay: DelayModel,
    pub faults: Vec<FaultSpec>,
    pub retry_interval: VirtualTime,
    pub horizon: VirtualTime,
    pub seed: u64,
    /// Issue one read per process once the network has settled.
    pub probes: bool,
    pub algorithm: Option<String>,
}

impl SimConfig {
    pub fn new(processes: usize, delay: DelayModel) -> Self {
        let d = delay.nominal().0;
        SimConfig {
            processes,
            sites: vec!["default".to_string(); processes],
            retry_interval: VirtualTime((5 * d).max(1)),
            delay,
            faults: Vec::new(),
            horizon: VirtualTime(1_000_000),
            seed: 0,
            probes: false,
            algorithm: None,
        }
    }

    pub fn validate(&self) -> Vec<SpecIssue> {
        let mut issues = Vec::new();
        if self.processes == 0 {
            issues.push(SpecIssue::new(
                "processes.count",
                "need at least one process",
            ));
        }
        if self.sites.len() != self.processes {
            issues.push(SpecIssue::new(
                "processes.sites",
                format!(
                    "{} sites for {} processes",
                    self.sites.len(),
                    self.processes
                ),
            ));
        }
        for (field, msg) in self.delay.problems() {
            issues.push(SpecIssue::new(format!("delay.{field}"), msg));
        }
        if self.horizon.0 == 0 {
            issues.push(SpecIssue::new("horizon", "horizon must be positive"));
        }
        if self.retry_interval.0 == 0 {
            issues.push(SpecIssue::new(
                "retry_interval",
                "retry interval must be positive",
            ));
        }
        for (i, f) in self.faults.iter().enumerate() {
            for (field, msg) in f.problems(self.processes) {
                issues.push(SpecIssue::new(format!("faults[{i}].{field}"), msg));
            }
        }
        issues
    }
}

#[derive(Debug, Default)]
struct Client {
    current: Option<u64>,
    backlog: VecDeque<(Operation, VirtualTime, bool)>,
}

pub struct Simulator<N: Node> {
    cfg: SimConfig,
    nodes: Vec<N>,
    rng: ChaCha8Rng,
    skews: Vec<u64>,
    now: VirtualTime,
    queue: BTreeMap<(VirtualTime, u64), EventKind>,
    next_seq: u64,
    next_msg: u64,
    next_op: u64,
    in_flight: BTreeMap<u64, Message<N::Msg>>,
    clients: Vec<Client>,
    records: Vec<Record>,
    fault_marks: Vec<(VirtualTime, usize, FaultEvent)>,
    permanent: bool,
    delivered: u64,
    probes_issued: bool,
    quiescent: bool,
}

impl<N: Node> Simulator<N> {
    /// Builds a simulator with its queue seeded from `workload`.
    pub fn new(
        cfg: SimConfig,
        nodes: Vec<N>,
        workload: &[Invocation],
    ) -> Result<Self, InvalidSpec> {
        let mut issues = cfg.validate();
        if nodes.len() != cfg.processes {
            issues.push(SpecIssue::new(
                "processes.count",
                format!("{} replicas for {} processes", nodes.len(), cfg.processes),
            ));
        }
        for (i, inv) in workload.iter().enumerate() {
            if inv.process.0 >= cfg.processes {
                issues.push(SpecIssue::new(
                    format!("workload[{i}].process"),
                    format!("unknown process {}", inv.process.0),
                ));
            }
            if inv.time > cfg.horizon {
                issues.push(SpecIssue::new(
                    format!("workload[{i}].time"),
                    format!("time {} is past the horizon {}", inv.time, cfg.horizon),
                ));
            }
        }
        if !issues.is_empty() {
            return Err(InvalidSpec(issues));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let d = cfg.delay.nominal().0;
        let skews = (0..cfg.processes)
            .map(|_| if d == 0 { 0 } else { rng.gen_range(0..d) })
            .collect();
        let mut sim = Simulator {
            nodes,
            rng,
            skews,
            now: VirtualTime::ZERO,
            queue: BTreeMap::new(),
            next_seq: 0,
            next_msg: 0,
            next_op: 0,
            in_flight: BTreeMap::new(),
            clients: (0..cfg.processes).map(|_| Client::default()).collect(),
            records: Vec::new(),
            fault_marks: Vec::new(),
            permanent: false,
            delivered: 0,
            probes_issued: false,
            quiescent: false,
            cfg,
        };
        for inv in workload {
            sim.schedule(
                inv.time,
                EventKind::Invoke {
                    process: inv.process,
                    op: inv.op,
                    probe: false,
                },
            );
        }
        for i in 0..sim.cfg.faults.len() {
            sim.mark_fault(i);
        }
        Ok(sim)
    }

    fn mark_fault(&mut self, index: usize) {
        let f = &self.cfg.faults[index];
        self.fault_marks.push((f.start, index, FaultEvent::Start));
        if let FaultEnd::At(end) = f.end {
            self.fault_marks.push((end, index, FaultEvent::End));
        }
        self.fault_marks
            .sort_by_key(|&(t, i, e)| (t, i, e == FaultEvent::Start));
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn now(&self) -> VirtualTime {
        self.now
    }

    pub fn nodes(&self) -> &[N] {
        &self.nodes
    }

    pub fn skew(&self, p: ProcessId) -> u64 {
        self.skews[p.0]
    }

    pub fn delivered_count(&self) -> u64 {
        self.delivered
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    /// The next event that `step` would dispatch, if any.
    pub fn peek(&self) -> Option<Event> {
        self.queue
            .first_key_value()
            .filter(|((t, _), _)| *t <= self.cfg.horizon)
            .map(|(&(time, seq), kind)| Event {
                time,
                seq,
                kind: kind.clone(),
            })
    }

    fn schedule(&mut self, time: VirtualTime, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.insert((time, seq), kind);
    }

    /// Adds a partition while the simulation runs. Only transmissions made
    /// after `fault.start` are affected; messages already in flight arrive.
    pub fn apply_partition(&mut self, fault: FaultSpec) -> Result<(), InvalidSpec> {
        let mut issues: Vec<SpecIssue> = fault
            .problems(self.cfg.processes)
            .into_iter()
            .map(|(field, msg)| SpecIssue::new(format!("fault.{field}"), msg))
            .collect();
        if !matches!(fault.kind, FaultKind::Partition { .. }) {
            issues.push(SpecIssue::new("fault.kind", "expected a partition"));
        }
        if !issues.is_empty() {
            return Err(InvalidSpec(issues));
        }
        self.cfg.faults.push(fault);
        self.mark_fault(self.cfg.faults.len() - 1);
        Ok(())
    }

    /// Sends `payload` over the link `from -> to` and returns the message id.
    /// Never fails: a dropped message simply does not arrive (or arrives
    /// later via retransmission).
    pub fn send(&mut self, from: ProcessId, to: ProcessId, payload: N::Msg) -> u64 {
        assert_ne!(from, to, "processes do not message themselves");
        assert!(to.0 < self.cfg.processes, "unknown receiver {to}");
        let id = self.next_msg;
        self.next_msg += 1;
        self.records.push(Record::Send {
            time: self.now,
            id,
            from,
            to,
            payload: serde_json::to_value(&payload).expect("message payloads serialize"),
        });
        self.in_flight.insert(
            id,
            Message {
                id,
                sender: from,
                receiver: to,
                payload,
                send_time: self.now,
                delivery_time: None,
            },
        );
        self.transmit(id);
        id
    }

    fn transmit(&mut self, id: u64) {
        let (from, to) = {
            let m = &self.in_flight[&id];
            (m.sender, m.receiver)
        };
        let now = self.now;
        let dropped_by = self
            .cfg
            .faults
            .iter()
            .position(|f| f.drops(now, id, from, to, &mut self.rng));
        match dropped_by {
            None => {
                let same_site = self.cfg.sites[from.0] == self.cfg.sites[to.0];
                let delay = self.cfg.delay.sample(&mut self.rng, same_site);
                self.schedule(now + delay, EventKind::Deliver { msg: id });
            }
            Some(i) => {
                let fault = &self.cfg.faults[i];
                if fault.blocks_forever(now, id, from, to) {
                    self.permanent = true;
                }
                if fault.retransmit {
                    let retry = self.cfg.retry_interval;
                    self.schedule(now + retry, EventKind::Retransmit { msg: id });
                } else {
                    self.in_flight.remove(&id);
                }
            }
        }
    }

    fn futile(&self, id: u64) -> bool {
        let m = &self.in_flight[&id];
        self.cfg
            .faults
            .iter()
            .any(|f| f.blocks_forever(self.now, id, m.sender, m.receiver))
    }

    /// Nothing left to happen except resends that can never get through.
    fn settled(&self) -> bool {
        self.queue
            .iter()
            .take_while(|((t, _), _)| *t <= self.cfg.horizon)
            .all(|(_, kind)| matches!(kind, EventKind::Retransmit { msg } if self.futile(*msg)))
    }

    fn emit_fault_marks(&mut self) {
        let now = self.now;
        let due = self.fault_marks.iter().take_while(|m| m.0 <= now).count();
        for (time, index, event) in self.fault_marks.drain(..due) {
            self.records.push(Record::Fault {
                time,
                index,
                event,
                fault: self.cfg.faults[index].clone(),
            });
        }
    }

    /// Pops and dispatches the next event, or reports quiescence when the
    /// queue is empty or every remaining event lies past the horizon.
    pub fn step(&mut self) -> Step {
        let Some((&(time, seq), _)) = self.queue.first_key_value() else {
            self.quiescent = true;
            return Step::Quiescent;
        };
        if time > self.cfg.horizon {
            self.quiescent = true;
            return Step::Quiescent;
        }
        let kind = self.queue.remove(&(time, seq)).expect("key just observed");
        debug_assert!(time >= self.now);
        self.now = time;
        self.emit_fault_marks();
        self.dispatch(kind.clone());
        Step::Dispatched(Event { time, seq, kind })
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::Invoke { process, op, probe } => {
                let client = &mut self.clients[process.0];
                if client.current.is_some() || !client.backlog.is_empty() {
                    client.backlog.push_back((op, self.now, probe));
                } else {
                    self.start_op(process, op, self.now, probe);
                }
            }
            EventKind::Resume { process } => {
                if self.clients[process.0].current.is_none() {
                    if let Some((op, requested, probe)) =
                        self.clients[process.0].backlog.pop_front()
                    {
                        self.start_op(process, op, requested, probe);
                    }
                }
            }
            EventKind::Deliver { msg } => {
                let mut m = self
                    .in_flight
                    .remove(&msg)
                    .expect("delivering unknown message");
                m.delivery_time = Some(self.now);
                self.delivered += 1;
                self.records.push(Record::Deliver {
                    time: self.now,
                    id: m.id,
                    from: m.sender,
                    to: m.receiver,
                    payload: serde_json::to_value(&m.payload).expect("message payloads serialize"),
                });
                let from = m.sender;
                self.with_node(m.receiver, |node, ctx| {
                    node.on_message(from, m.payload, ctx)
                });
            }
            EventKind::Retransmit { msg } => self.transmit(msg),
            EventKind::Timer { process, timer } => {
                self.with_node(process, |node, ctx| node.on_timer(timer, ctx));
            }
        }
    }

    fn start_op(&mut self, process: ProcessId, op: Operation, requested: VirtualTime, probe: bool) {
        let op_id = self.next_op;
        self.next_op += 1;
        self.clients[process.0].current = Some(op_id);
        self.records.push(Record::OpInvoke {
            time: self.now,
            op_id,
            process,
            op: op.kind(),
            value: op.value(),
            requested,
            probe,
        });
        self.with_node(process, |node, ctx| node.on_invoke(op, ctx));
    }

    fn with_node(&mut self, p: ProcessId, f: impl FnOnce(&mut N, &mut Context<'_, N::Msg>)) {
        let mut actions = Vec::new();
        let mut ctx = Context {
            me: p,
            processes: self.cfg.processes,
            local_time: self.now + self.skews[p.0],
            actions: &mut actions,
        };
        f(&mut self.nodes[p.0], &mut ctx);
        for action in actions {
            match action {
                Action::Send { to, msg } => {
                    self.send(p, to, msg);
                }
                Action::Timer { after, id } => {
                    self.schedule(
                        self.now + after,
                        EventKind::Timer {
                            process: p,
                            timer: id,
                        },
                    );
                }
                Action::Applied(value) => self.records.push(Record::Apply {
                    time: self.now,
                    process: p,
                    value,
                }),
                Action::Complete(output) => {
                    let op_id = self.clients[p.0]
                        .current
                        .take()
                        .unwrap_or_else(|| panic!("{p} completed with no operation outstanding"));
                    self.records.push(Record::OpResponse {
                        time: self.now,
                        op_id,
                        process: p,
                        output,
                    });
                    if !self.clients[p.0].backlog.is_empty() {
                        self.schedule(self.now, EventKind::Resume { process: p });
                    }
                }
            }
        }
    }

    fn issue_probes(&mut self) {
        self.probes_issued = true;
        for p in 0..self.cfg.processes {
            self.schedule(
                self.now,
                EventKind::Invoke {
                    process: ProcessId(p),
                    op: Operation::Read,
                    probe: true,
                },
            );
        }
    }

    /// Snapshot of the history so far.
    pub fn history(&self) -> History {
        let mut meta = Meta::new(self.cfg.processes, self.cfg.horizon);
        meta.algorithm = self.cfg.algorithm.clone();
        meta.end_time = self.now;
        meta.quiescent = self.quiescent;
        meta.partition_permanent = self.permanent;
        History::from_records(meta, self.records.clone())
            .expect("simulator records form a well-formed history")
    }

    /// Steps until quiescent (issuing probe reads once the network settles,
    /// when configured). Fails if any operation never completed, which is a
    /// violation of termination; the history is still returned in the error.
    pub fn run_to_quiescence(&mut self) -> Result<History, NonTerminating> {
        loop {
            if self.cfg.probes && !self.probes_issued {
                let retry_next = matches!(
                    self.peek().map(|e| e.kind),
                    None | Some(EventKind::Retransmit { .. })
                );
                if retry_next && self.settled() {
                    self.issue_probes();
                }
            }
            if let Step::Quiescent = self.step() {
                if self.cfg.probes && !self.probes_issued {
                    self.issue_probes();
                    continue;
                }
                break;
            }
        }
        self.emit_fault_marks();
        let history = self.history();
        let pending: Vec<u64> = history.incomplete_ops().map(|o| o.op_id).collect();
        if pending.is_empty() {
            Ok(history)
        } else {
            Err(NonTerminating {
                history: Box::new(history),
                pending,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::{is_loss_free, OpKind};
    use crate::registers::Tag;

    /// Echoes each write to every peer and completes immediately; a stand-in
    /// replica for exercising the link layer.
    #[derive(Default)]
    struct Echo {
        seen: Vec<i64>,
    }

    impl Node for Echo {
        type Msg = i64;

        fn on_invoke(&mut self, op: Operation, ctx: &mut Context<'_, i64>) {
            let v = Value {
                payload: op.value().unwrap_or(0),
                writer: ctx.me(),
                tag: Tag(1, ctx.me()),
            };
            if let Operation::Write(x) = op {
                ctx.broadcast(x);
                ctx.complete(OpOutput::Written(v));
            } else {
                ctx.complete(OpOutput::Value(v));
            }
        }

        fn on_message(&mut self, _from: ProcessId, msg: i64, _ctx: &mut Context<'_, i64>) {
            self.seen.push(msg);
        }
    }

    fn echo_sim(cfg: SimConfig, workload: &[Invocation]) -> Simulator<Echo> {
        let nodes = (0..cfg.processes).map(|_| Echo::default()).collect();
        Simulator::new(cfg, nodes, workload).unwrap()
    }

    fn write_at(t: u64, p: usize, v: i64) -> Invocation {
        Invocation {
            time: VirtualTime(t),
            process: ProcessId(p),
            op: Operation::Write(v),
        }
    }

    #[test]
    fn fresh_simulator_is_empty() {
        let sim = echo_sim(SimConfig::new(2, DelayModel::fixed(10)), &[]);
        assert_eq!(sim.now(), VirtualTime(0));
        assert_eq!(sim.delivered_count(), 0);
        assert_eq!(sim.history().records().len(), 0);
    }

    #[test]
    fn empty_queue_is_quiescent() {
        let mut sim = echo_sim(SimConfig::new(2, DelayModel::fixed(10)), &[]);
        assert_eq!(sim.step(), Step::Quiescent);
        let h = sim.run_to_quiescence().unwrap();
        assert!(h.ops().is_empty());
        assert!(h.records().is_empty());
    }

    #[test]
    fn overlapping_partition_groups_rejected() {
        let mut cfg = SimConfig::new(2, DelayModel::fixed(10));
        cfg.faults.push(FaultSpec::partition(
            vec![vec![0], vec![0]],
            0,
            FaultEnd::Forever,
        ));
        let err = Simulator::new(cfg, vec![Echo::default(), Echo::default()], &[])
            .err()
            .unwrap();
        assert!(err.0.iter().any(|i| i.path.starts_with("faults[0]")));
    }

    #[test]
    fn fixed_delay_arithmetic() {
        let mut sim = echo_sim(SimConfig::new(2, DelayModel::fixed(10)), &[]);
        sim.now = VirtualTime(5);
        sim.send(ProcessId(0), ProcessId(1), 7);
        let ev = sim.peek().unwrap();
        assert_eq!(ev.time, VirtualTime(15));
        assert_eq!(ev.kind, EventKind::Deliver { msg: 0 });
    }

    #[test]
    fn uniform_delay_regression() {
        let mut cfg = SimConfig::new(2, DelayModel::uniform(10, 4));
        cfg.seed = 42;
        let mut sim = echo_sim(cfg, &[]);
        sim.now = VirtualTime(5);
        sim.send(ProcessId(0), ProcessId(1), 7);
        let t = sim.peek().unwrap().time.0;
        assert!((11..=15).contains(&t));
        assert_eq!(t, 14);
    }

    #[test]
    fn ties_break_by_seq() {
        let w = [write_at(3, 1, 10), write_at(3, 0, 20)];
        let mut sim = echo_sim(SimConfig::new(2, DelayModel::fixed(10)), &w);
        let Step::Dispatched(a) = sim.step() else {
            panic!()
        };
        let Step::Dispatched(b) = sim.step() else {
            panic!()
        };
        assert_eq!((a.time, b.time), (VirtualTime(3), VirtualTime(3)));
        assert!(a.seq < b.seq);
        assert!(matches!(
            a.kind,
            EventKind::Invoke {
                process: ProcessId(1),
                ..
            }
        ));
    }

    #[test]
    fn partition_drops_without_retransmit() {
        let mut cfg = SimConfig::new(2, DelayModel::fixed(10));
        cfg.faults.push(
            FaultSpec::partition(vec![vec![0], vec![1]], 0, FaultEnd::Forever)
                .with_retransmit(false),
        );
        let mut sim = echo_sim(cfg, &[write_at(0, 0, 1)]);
        let h = sim.run_to_quiescence().unwrap();
        assert_eq!(h.sends().len(), 1);
        assert!(h.deliveries().is_empty());
        assert!(h.partition_permanent());
        assert!(!is_loss_free(&h).unwrap());
    }

    #[test]
    fn forever_partition_with_retransmit_runs_to_horizon() {
        let mut cfg = SimConfig::new(2, DelayModel::fixed(10));
        cfg.horizon = VirtualTime(1000);
        cfg.faults.push(FaultSpec::partition(
            vec![vec![0], vec![1]],
            0,
            FaultEnd::Forever,
        ));
        let mut sim = echo_sim(cfg, &[write_at(0, 0, 1)]);
        let h = sim.run_to_quiescence().unwrap();
        assert!(h.deliveries().is_empty());
        // retries every 50 ticks, the last one at or before the horizon
        assert_eq!(h.meta().end_time, VirtualTime(1000));
        assert!(sim.pending_events() > 0);
    }

    #[test]
    fn partition_heals_and_retry_delivers() {
        let mut cfg = SimConfig::new(2, DelayModel::fixed(10));
        cfg.retry_interval = VirtualTime(30);
        cfg.faults.push(FaultSpec::partition(
            vec![vec![0], vec![1]],
            100,
            FaultEnd::At(VirtualTime(200)),
        ));
        let mut sim = echo_sim(cfg, &[write_at(150, 0, 1)]);
        let h = sim.run_to_quiescence().unwrap();
        // attempts at 150, 180 dropped; 210 gets through
        assert_eq!(h.deliveries().len(), 1);
        assert_eq!(h.deliveries()[0].time, VirtualTime(220));
        assert!(is_loss_free(&h).unwrap());
    }

    #[test]
    fn in_flight_messages_survive_partition_start() {
        let mut cfg = SimConfig::new(2, DelayModel::fixed(10));
        cfg.faults.push(
            FaultSpec::partition(vec![vec![0], vec![1]], 5, FaultEnd::Forever)
                .with_retransmit(false),
        );
        let mut sim = echo_sim(cfg, &[write_at(0, 0, 1), write_at(6, 0, 2)]);
        let h = sim.run_to_quiescence().unwrap();
        assert_eq!(h.deliveries().len(), 1);
        assert_eq!(sim.nodes()[1].seen, vec![1]);
    }

    #[test]
    fn apply_partition_validates_and_takes_effect() {
        let mut sim = echo_sim(
            SimConfig::new(3, DelayModel::fixed(10)),
            &[write_at(50, 0, 1)],
        );
        let degenerate = FaultSpec::partition(vec![vec![0, 1, 2], vec![]], 0, FaultEnd::Forever);
        assert!(sim.apply_partition(degenerate).is_err());
        let not_partition = FaultSpec::drop_probability(0.5, 0, FaultEnd::Forever);
        assert!(sim.apply_partition(not_partition).is_err());
        sim.apply_partition(
            FaultSpec::partition(vec![vec![0], vec![1]], 0, FaultEnd::Forever)
                .with_retransmit(false),
        )
        .unwrap();
        let h = sim.run_to_quiescence().unwrap();
        // 0 -> 2 crosses no group boundary
        assert_eq!(h.deliveries().len(), 1);
        assert_eq!(h.deliveries()[0].to, ProcessId(2));
    }

    #[test]
    fn busy_client_queues_operations() {
        struct Slow;
        impl Node for Slow {
            type Msg = ();
            fn on_invoke(&mut self, _op: Operation, ctx: &mut Context<'_, ()>) {
                ctx.set_timer(100, 0);
            }
            fn on_message(&mut self, _: ProcessId, _: (), _: &mut Context<'_, ()>) {}
            fn on_timer(&mut self, _t: u64, ctx: &mut Context<'_, ()>) {
                ctx.complete(OpOutput::Value(Value::initial()));
            }
        }
        let read = |t| Invocation {
            time: VirtualTime(t),
            process: ProcessId(0),
            op: Operation::Read,
        };
        let mut sim = Simulator::new(
            SimConfig::new(1, DelayModel::fixed(1)),
            vec![Slow],
            &[read(0), read(10)],
        )
        .unwrap();
        let h = sim.run_to_quiescence().unwrap();
        let second = &h.ops()[1];
        assert_eq!(second.kind, OpKind::Read);
        assert_eq!(second.requested_time, VirtualTime(10));
        assert_eq!(second.invoke_time, VirtualTime(100));
        assert_eq!(second.response_time, Some(VirtualTime(200)));
    }

    #[test]
    fn stuck_operation_reported() {
        struct Never;
        impl Node for Never {
            type Msg = ();
            fn on_invoke(&mut self, _op: Operation, _ctx: &mut Context<'_, ()>) {}
            fn on_message(&mut self, _: ProcessId, _: (), _: &mut Context<'_, ()>) {}
        }
        let inv = Invocation {
            time: VirtualTime(0),
            process: ProcessId(0),
            op: Operation::Read,
        };
        let mut sim =
            Simulator::new(SimConfig::new(1, DelayModel::fixed(1)), vec![Never], &[inv]).unwrap();
        let err = sim.run_to_quiescence().unwrap_err();
        assert_eq!(err.pending, vec![0]);
        assert_eq!(err.history.ops().len(), 1);
    }

    #[test]
    fn clock_skew_bounded_by_delay() {
        let mut cfg = SimConfig::new(5, DelayModel::fixed(10));
        cfg.seed = 9;
        let sim = echo_sim(cfg, &[]);
        for p in 0..5 {
            assert!(sim.skew(ProcessId(p)) < 10);
        }
    }
}
