use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::network::{GraphError, Network, Node, PortBuffers, TranscriptEntry};
use super::{Footprint, MeterError, NodeId, Payload, PortId, ReadOrderPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
pub enum FaultKind {
    #[error("port {0} read twice in one round")]
    DoubleRead(PortId),
    #[error("port {0} written twice in one round")]
    DoubleWrite(PortId),
    #[error("send on dead port {0}")]
    DeadPort(PortId),
    #[error("memory budget exceeded: {current} words in use, budget {budget}")]
    Budget { current: u64, budget: u64 },
    #[error("memory accounting: {0}")]
    Accounting(String),
    #[error("{kind} message of {bits} bits exceeds the {budget}-bit budget")]
    MessageTooLarge { kind: String, bits: u64, budget: u64 },
    #[error("explicit receive under an adversarial read order")]
    PullUnderAdversary,
    #[error("read-order policy returned a non-permutation")]
    BadPermutation,
    #[error("protocol fault: {0}")]
    Protocol(String),
}

impl From<MeterError> for FaultKind {
    fn from(e: MeterError) -> Self {
        match e {
            MeterError::Budget { current, budget } => FaultKind::Budget { current, budget },
            other => FaultKind::Accounting(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("node {node}, round {round}, phase '{phase}': {kind}")]
pub struct Fault {
    pub node: NodeId,
    pub round: u64,
    pub phase: String,
    pub kind: FaultKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Fault(#[from] Fault),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("stage '{stage}' did not finish within {limit} rounds")]
    RoundLimit { stage: String, limit: u64 },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

/// Which read interface a protocol is written against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReadSupport {
    /// Explicit `receive` calls in a node-chosen order.
    Pull,
    /// Only `next_delivery`.
    Stream,
    Both,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u64,
    pub messages_delivered: u64,
    pub reads: u64,
    pub writes: u64,
    pub max_message_bits: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    /// Last round (counted from 1 within the stage) in which a message was sent.
    pub rounds: u64,
    pub executed_rounds: u64,
    pub messages: u64,
    pub max_message_bits: u64,
    pub peak_memory_words: u64,
    pub faults: u64,
    /// Messages left unread in in-buffers when the stage ended.
    pub undelivered: u64,
    #[serde(skip)]
    pub per_round_messages: Vec<u64>,
}

/// A node's view of one round: its own state and ports, nothing else.
pub struct NodeCtx<'a, V, M> {
    node: &'a mut Node<V, M>,
    round: u64,
    word_bits: u32,
    strict: bool,
    message_budget_bits: u64,
    adversarial: bool,
    order: VecDeque<PortId>,
    faults: Vec<FaultKind>,
    reads: u64,
    writes: u64,
    max_bits: u64,
}

impl<'a, V, M: Payload> NodeCtx<'a, V, M> {
    pub fn id(&self) -> NodeId {
        self.node.id
    }

    /// Round number, counted from 1 since the network was built.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn vars(&self) -> &V {
        &self.node.vars
    }

    pub fn vars_mut(&mut self) -> &mut V {
        &mut self.node.vars
    }

    pub fn degree(&self) -> usize {
        self.node.degree()
    }

    pub fn port_slots(&self) -> usize {
        self.node.links.len()
    }

    pub fn is_live(&self, port: PortId) -> bool {
        self.node.link(port).is_some()
    }

    /// First live port strictly after `after` (or the first live port).
    pub fn next_live_port(&self, after: Option<PortId>) -> Option<PortId> {
        let start = after.map_or(0, |p| p.index() + 1);
        (start..self.node.links.len())
            .find(|&i| self.node.links[i].is_some())
            .map(|i| PortId(i as u32))
    }

    pub fn live_ports(&self) -> Vec<PortId> {
        self.node.live_ports().collect()
    }

    /// Whether the in-buffer of `port` currently holds a message.
    pub fn has_message(&self, port: PortId) -> bool {
        self.node
            .buffers
            .get(port.index())
            .is_some_and(|b| b.in_buffer.is_some())
    }

    pub fn raise(&mut self, msg: impl Into<String>) {
        self.faults.push(FaultKind::Protocol(msg.into()));
    }

    pub fn charge(&mut self, words: u64) {
        if let Err(e) = self.node.meter.charge(words) {
            self.faults.push(e.into());
        }
    }

    pub fn release(&mut self, words: u64) {
        if let Err(e) = self.node.meter.release(words) {
            self.faults.push(e.into());
        }
    }

    /// Explicit read of one port; clears the buffer.
    pub fn receive(&mut self, port: PortId) -> Option<M> {
        if self.adversarial {
            self.faults.push(FaultKind::PullUnderAdversary);
            return None;
        }
        self.take(port)
    }

    fn take(&mut self, port: PortId) -> Option<M> {
        let buf = self.node.buffers.get_mut(port.index())?;
        if buf.read_this_round {
            if self.strict {
                self.faults.push(FaultKind::DoubleRead(port));
            }
            return None;
        }
        buf.read_this_round = true;
        self.node.dirty_reads.push(port);
        self.reads += 1;
        buf.in_buffer.take()
    }

    /// Next message in the round's read order, or `None` at end of stream.
    pub fn next_delivery(&mut self) -> Option<(PortId, M)> {
        while let Some(p) = self.order.pop_front() {
            let buf = &self.node.buffers[p.index()];
            if buf.read_this_round || buf.in_buffer.is_none() {
                continue;
            }
            if let Some(m) = self.take(p) {
                return Some((p, m));
            }
        }
        None
    }

    pub fn send(&mut self, port: PortId, msg: M) {
        if self.node.link(port).is_none() {
            self.faults.push(FaultKind::DeadPort(port));
            return;
        }
        let bits = msg.bit_size(self.word_bits);
        if bits > self.message_budget_bits {
            self.faults.push(FaultKind::MessageTooLarge {
                kind: msg.kind().to_string(),
                bits,
                budget: self.message_budget_bits,
            });
            return;
        }
        let buf = &mut self.node.buffers[port.index()];
        if buf.written_this_round {
            if self.strict {
                self.faults.push(FaultKind::DoubleWrite(port));
            }
            return;
        }
        buf.written_this_round = true;
        buf.out_buffer = Some(msg);
        self.node.dirty_writes.push(port);
        self.writes += 1;
        self.max_bits = self.max_bits.max(bits);
    }

    pub fn broadcast(&mut self, msg: M) {
        self.broadcast_except_if(msg, |_| false);
    }

    /// Sends on every live port not in `excluded`.
    pub fn broadcast_except(&mut self, msg: M, excluded: &[PortId]) {
        self.charge(excluded.len() as u64);
        self.broadcast_except_if(msg, |p| excluded.contains(&p));
        self.release(excluded.len() as u64);
    }

    pub fn broadcast_except_if(&mut self, msg: M, skip: impl Fn(PortId) -> bool) {
        let mut cursor = self.next_live_port(None);
        while let Some(p) = cursor {
            if !skip(p) {
                self.send(p, msg.clone());
            }
            cursor = self.next_live_port(Some(p));
        }
    }
}

impl<V: Footprint, M: Payload> Network<V, M> {
    /// Executes one synchronous round.
    pub fn run_round(
        &mut self,
        policy: &ReadOrderPolicy<M>,
        mut handler: impl FnMut(&mut NodeCtx<'_, V, M>),
    ) -> Result<RoundReport, SimError> {
        self.round += 1;
        let round = self.round;
        let delivered = self.deliver();
        let mut report = RoundReport {
            round,
            messages_delivered: delivered,
            ..RoundReport::default()
        };

        let (strict, msg_budget) = (self.config.strict, self.config.message_budget_bits);
        let word_bits = self.word_bits;
        for node in &mut self.nodes {
            let pending: Vec<(PortId, &M)> = node
                .buffers
                .iter()
                .enumerate()
                .filter_map(|(i, b)| b.in_buffer.as_ref().map(|m| (PortId(i as u32), m)))
                .collect();
            let order = policy.order(node.id, round, &pending);
            let mut faults = Vec::new();
            if !is_permutation(&order, &pending) {
                faults.push(FaultKind::BadPermutation);
            }
            drop(pending);

            let before = node.vars.footprint_words();
            if let Err(e) = node.meter.charge(before) {
                faults.push(e.into());
            }
            let mut ctx = NodeCtx {
                node,
                round,
                word_bits,
                strict,
                message_budget_bits: msg_budget,
                adversarial: policy.is_adversarial(),
                order: order.into(),
                faults,
                reads: 0,
                writes: 0,
                max_bits: 0,
            };
            handler(&mut ctx);
            let NodeCtx {
                node,
                mut faults,
                reads,
                writes,
                max_bits,
                ..
            } = ctx;
            let after = node.vars.footprint_words();
            let adjust = if after >= before {
                node.meter.charge(after - before)
            } else {
                node.meter.release(before - after)
            };
            if let Err(e) = adjust {
                faults.push(e.into());
            }
            if node.meter.current_words() != after {
                faults.push(FaultKind::Accounting(format!(
                    "{} words still charged at end of round, expected {after}",
                    node.meter.current_words()
                )));
            }
            let _ = node.meter.release(node.meter.current_words());

            report.reads += reads;
            report.writes += writes;
            report.max_message_bits = report.max_message_bits.max(max_bits);
            if let Some(kind) = faults.into_iter().next() {
                return Err(SimError::Fault(Fault {
                    node: node.id,
                    round,
                    phase: self.phase.clone(),
                    kind,
                }));
            }
        }
        self.messages += report.writes;
        Ok(report)
    }

    /// Moves every pending out-buffer into its paired in-buffer.
    fn deliver(&mut self) -> u64 {
        let mut moves = Vec::new();
        for node in &mut self.nodes {
            for p in node.dirty_reads.drain(..) {
                if let Some(b) = node.buffers.get_mut(p.index()) {
                    b.read_this_round = false;
                }
            }
            for p in node.dirty_writes.drain(..) {
                let Some(b) = node.buffers.get_mut(p.index()) else {
                    continue;
                };
                b.written_this_round = false;
                if let (Some(msg), Some(link)) = (b.out_buffer.take(), node.links[p.index()]) {
                    moves.push((node.id, link, msg));
                }
            }
        }
        let count = moves.len() as u64;
        for (from, link, msg) in moves {
            let Some(&j) = self.index.get(&link.node) else {
                continue;
            };
            if self.config.record_transcript {
                self.transcript.push(TranscriptEntry {
                    round: self.round,
                    from,
                    to: link.node,
                    port: link.port,
                    message: msg.clone(),
                });
            }
            if let Some(b) = self.nodes[j].buffers.get_mut(link.port.index()) {
                b.in_buffer = Some(msg);
            }
        }
        count
    }

    /// Empties every buffer and returns how many unread messages were dropped.
    pub fn clear_buffers(&mut self) -> u64 {
        let mut dropped = 0;
        for node in &mut self.nodes {
            for b in &mut node.buffers {
                dropped += b.in_buffer.is_some() as u64 + b.out_buffer.is_some() as u64;
                *b = PortBuffers::default();
            }
            node.dirty_reads.clear();
            node.dirty_writes.clear();
        }
        dropped
    }
}

fn is_permutation<M>(order: &[PortId], pending: &[(PortId, &M)]) -> bool {
    if order.len() != pending.len() {
        return false;
    }
    let mut a: Vec<PortId> = order.to_vec();
    a.sort_unstable();
    a.iter().zip(pending).all(|(x, (y, _))| x == y)
}

/// Runs rounds until `done` holds, then clears leftover buffers.
///
/// `step` is the per-node handler; `done` is an observer check made after
/// every round and never visible to nodes.
pub fn run_stage<V: Footprint, M: Payload>(
    net: &mut Network<V, M>,
    policy: &ReadOrderPolicy<M>,
    support: ReadSupport,
    name: &str,
    max_rounds: u64,
    mut step: impl FnMut(&mut NodeCtx<'_, V, M>),
    mut done: impl FnMut(&Network<V, M>) -> bool,
) -> Result<StageReport, SimError> {
    if support == ReadSupport::Pull && policy.is_adversarial() {
        return Err(SimError::Config(format!(
            "stage '{name}' needs node-chosen reads but the policy is {policy:?}"
        )));
    }
    net.set_phase(name);
    net.reset_peaks();
    let mut report = StageReport {
        name: name.to_string(),
        ..StageReport::default()
    };
    loop {
        if report.executed_rounds >= max_rounds {
            return Err(SimError::RoundLimit {
                stage: name.to_string(),
                limit: max_rounds,
            });
        }
        let r = net.run_round(policy, &mut step)?;
        report.executed_rounds += 1;
        report.messages += r.writes;
        report.per_round_messages.push(r.writes);
        if r.writes > 0 {
            report.rounds = report.executed_rounds;
        }
        report.max_message_bits = report.max_message_bits.max(r.max_message_bits);
        if done(net) {
            break;
        }
    }
    report.peak_memory_words = net.peak_memory_words();
    report.undelivered = net.clear_buffers();
    Ok(report)
}
