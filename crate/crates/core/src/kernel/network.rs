use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{MemoryMeter, NodeId, PortId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge {0} - {1}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("graph is disconnected: {0} and {1} lie in different components")]
    Disconnected(NodeId, NodeId),
    #[error("graph has no nodes")]
    Empty,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// How live ports are laid out on each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortAssignment {
    /// Ports 0..deg in edge-list order.
    Contiguous,
    /// Like contiguous, but a dead port is inserted before each live one with
    /// probability 1/2 (per-node stream derived from the seed).
    Gapped(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortLink {
    pub node: NodeId,
    pub port: PortId,
}

/// Kernel knobs shared by every node of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Fault on a second read or write of a port within one round.
    pub strict: bool,
    pub memory_budget_words: u64,
    pub message_budget_bits: u64,
    pub record_transcript: bool,
}

impl KernelConfig {
    /// Strict mode, `64 * log2(n)^2` bits of memory and `O(log n)`-bit messages.
    pub fn for_size(n: usize) -> Self {
        let w = word_bits_for(n) as u64;
        KernelConfig {
            strict: true,
            memory_budget_words: 64 * w,
            message_budget_bits: small_message_budget(w as u32),
            record_transcript: false,
        }
    }
}

/// `ceil(log2 n)`, at least one bit.
pub fn word_bits_for(n: usize) -> u32 {
    let n = n.max(2) as u64;
    (64 - (n - 1).leading_zeros()).max(1)
}

/// Budget for `O(log n)`-bit messages: the 8-bit tag plus 16 words.
pub fn small_message_budget(word_bits: u32) -> u64 {
    8 + 16 * word_bits as u64
}

/// Budget for `O(log^2 n)`-bit messages: the 8-bit tag plus `16 + w` words.
pub fn big_message_budget(word_bits: u32) -> u64 {
    8 + (16 + word_bits as u64) * word_bits as u64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortBuffers<M> {
    pub in_buffer: Option<M>,
    pub out_buffer: Option<M>,
    pub read_this_round: bool,
    pub written_this_round: bool,
}

impl<M> Default for PortBuffers<M> {
    fn default() -> Self {
        PortBuffers {
            in_buffer: None,
            out_buffer: None,
            read_this_round: false,
            written_this_round: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node<V, M> {
    pub(crate) id: NodeId,
    pub(crate) links: Vec<Option<PortLink>>,
    pub(crate) buffers: Vec<PortBuffers<M>>,
    pub(crate) meter: MemoryMeter,
    pub(crate) vars: V,
    pub(crate) dirty_writes: Vec<PortId>,
    pub(crate) dirty_reads: Vec<PortId>,
}

impl<V, M> Node<V, M> {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn vars(&self) -> &V {
        &self.vars
    }

    pub fn vars_mut(&mut self) -> &mut V {
        &mut self.vars
    }

    pub fn meter(&self) -> &MemoryMeter {
        &self.meter
    }

    pub fn port_slots(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, port: PortId) -> Option<PortLink> {
        self.links.get(port.index()).copied().flatten()
    }

    pub fn live_ports(&self) -> impl Iterator<Item = PortId> + '_ {
        self.links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_some())
            .map(|(i, _)| PortId(i as u32))
    }

    pub fn degree(&self) -> usize {
        self.links.iter().filter(|l| l.is_some()).count()
    }

    pub fn links(&self) -> &[Option<PortLink>] {
        &self.links
    }

    pub fn buffers(&self) -> &[PortBuffers<M>] {
        &self.buffers
    }
}

/// One delivered message, as seen by the receiver.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TranscriptEntry<M> {
    pub round: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub port: PortId,
    pub message: M,
}

/// Port-mapped network with per-node buffers, memory meters and state.
#[derive(Debug, Clone)]
pub struct Network<V, M> {
    pub(crate) nodes: Vec<Node<V, M>>,
    pub(crate) index: HashMap<NodeId, usize>,
    pub(crate) round: u64,
    pub(crate) messages: u64,
    pub(crate) word_bits: u32,
    pub(crate) config: KernelConfig,
    pub(crate) phase: String,
    pub(crate) removed: u32,
    pub(crate) transcript: Vec<TranscriptEntry<M>>,
}

impl<V: Default, M> Network<V, M> {
    /// Builds a network over `nodes` plus every edge endpoint.
    pub fn build(
        nodes: &[NodeId],
        edges: &[(NodeId, NodeId)],
        assignment: PortAssignment,
        config: Option<KernelConfig>,
    ) -> Result<Self, GraphError> {
        let mut ids: BTreeSet<NodeId> = nodes.iter().copied().collect();
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let key = if u < v { (u, v) } else { (v, u) };
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            ids.insert(u);
            ids.insert(v);
        }
        if ids.is_empty() {
            return Err(GraphError::Empty);
        }
        check_connected(&ids, edges)?;

        let n = ids.len();
        let word_bits = word_bits_for(n);
        let config = config.unwrap_or_else(|| KernelConfig::for_size(n));
        let index: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut nodes: Vec<Node<V, M>> = ids
            .iter()
            .map(|&id| Node {
                id,
                links: Vec::new(),
                buffers: Vec::new(),
                meter: MemoryMeter::new(word_bits, config.memory_budget_words),
                vars: V::default(),
                dirty_writes: Vec::new(),
                dirty_reads: Vec::new(),
            })
            .collect();

        let mut rngs: HashMap<NodeId, ChaCha8Rng> = HashMap::new();
        let mut next_slot = |node: &mut Node<V, M>| -> PortId {
            if let PortAssignment::Gapped(seed) = assignment {
                let rng = rngs
                    .entry(node.id)
                    .or_insert_with(|| ChaCha8Rng::seed_from_u64(seed ^ node.id.0.wrapping_mul(0x9E37_79B9)));
                if rng.gen_bool(0.5) {
                    node.links.push(None);
                }
            }
            node.links.push(None);
            PortId(node.links.len() as u32 - 1)
        };
        for &(u, v) in edges {
            let pu = next_slot(&mut nodes[index[&u]]);
            let pv = next_slot(&mut nodes[index[&v]]);
            nodes[index[&u]].links[pu.index()] = Some(PortLink { node: v, port: pv });
            nodes[index[&v]].links[pv.index()] = Some(PortLink { node: u, port: pu });
        }
        for node in &mut nodes {
            node.buffers = (0..node.links.len()).map(|_| PortBuffers::default()).collect();
        }
        Ok(Network {
            nodes,
            index,
            round: 0,
            messages: 0,
            word_bits,
            config,
            phase: String::new(),
            removed: 0,
            transcript: Vec::new(),
        })
    }

    /// Reassembles a network from saved topology and state. Buffers start empty.
    pub fn from_parts(
        parts: Vec<(NodeId, Vec<Option<PortLink>>, V)>,
        word_bits: u32,
        config: KernelConfig,
        removed: u32,
    ) -> Result<Self, GraphError> {
        if parts.is_empty() {
            return Err(GraphError::Empty);
        }
        let index = parts.iter().enumerate().map(|(i, (id, _, _))| (*id, i)).collect();
        let nodes = parts
            .into_iter()
            .map(|(id, links, vars)| Node {
                id,
                buffers: (0..links.len()).map(|_| PortBuffers::default()).collect(),
                links,
                meter: MemoryMeter::new(word_bits, config.memory_budget_words),
                vars,
                dirty_writes: Vec::new(),
                dirty_reads: Vec::new(),
            })
            .collect();
        Ok(Network {
            nodes,
            index,
            round: 0,
            messages: 0,
            word_bits,
            config,
            phase: String::new(),
            removed,
            transcript: Vec::new(),
        })
    }
}

impl<V, M> Network<V, M> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.degree()).sum::<usize>() / 2
    }

    pub fn max_degree(&self) -> usize {
        self.nodes.iter().map(|n| n.degree()).max().unwrap_or(0)
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn message_count(&self) -> u64 {
        self.messages
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn set_strict(&mut self, strict: bool) {
        self.config.strict = strict;
    }

    pub fn set_message_budget_bits(&mut self, bits: u64) {
        self.config.message_budget_bits = bits;
    }

    pub fn set_memory_budget_words(&mut self, words: u64) {
        self.config.memory_budget_words = words;
        for n in &mut self.nodes {
            n.meter.set_budget_words(words);
        }
    }

    pub fn set_record_transcript(&mut self, on: bool) {
        self.config.record_transcript = on;
    }

    pub fn transcript(&self) -> &[TranscriptEntry<M>] {
        &self.transcript
    }

    pub fn phase(&self) -> &str {
        &self.phase
    }

    pub fn set_phase(&mut self, phase: impl Into<String>) {
        self.phase = phase.into();
    }

    /// Number of nodes deleted from this network since it was built.
    pub fn removed_count(&self) -> u32 {
        self.removed
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn nodes(&self) -> &[Node<V, M>] {
        &self.nodes
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node<V, M>> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut Node<V, M>> {
        self.index.get(&id).map(|&i| &mut self.nodes[i])
    }

    pub fn vars(&self, id: NodeId) -> Option<&V> {
        self.node(id).map(|n| &n.vars)
    }

    pub fn vars_mut(&mut self, id: NodeId) -> Option<&mut V> {
        self.node_mut(id).map(|n| &mut n.vars)
    }

    /// Where port `port` of `id` leads, if it is live.
    pub fn link(&self, id: NodeId, port: PortId) -> Option<PortLink> {
        self.node(id).and_then(|n| n.link(port))
    }

    /// Largest peak of any node's meter.
    pub fn peak_memory_words(&self) -> u64 {
        self.nodes.iter().map(|n| n.meter.peak_words()).max().unwrap_or(0)
    }

    pub fn reset_peaks(&mut self) {
        for n in &mut self.nodes {
            n.meter.reset_peak();
        }
    }

    /// True when no message sits in any buffer.
    pub fn is_quiet(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.dirty_writes.is_empty() && n.buffers.iter().all(|b| b.in_buffer.is_none()))
    }

    /// Checks the port map is an involution.
    pub fn check_involution(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.links.iter().enumerate().all(|(p, l)| match l {
                None => true,
                Some(l) => self
                    .link(l.node, l.port)
                    .is_some_and(|back| back.node == n.id && back.port.index() == p),
            })
        })
    }

    /// Removes a node; every port that pointed at it becomes dead.
    pub fn remove_node(&mut self, id: NodeId) -> Result<Node<V, M>, GraphError> {
        let idx = *self.index.get(&id).ok_or(GraphError::UnknownNode(id))?;
        let node = self.nodes.remove(idx);
        for l in node.links.iter().flatten() {
            if let Some(&j) = self.index.get(&l.node) {
                let j = if j > idx { j - 1 } else { j };
                let nb = &mut self.nodes[j];
                nb.links[l.port.index()] = None;
                nb.buffers[l.port.index()] = PortBuffers::default();
            }
        }
        self.index = self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        self.removed += 1;
        Ok(node)
    }

    /// Opens a fresh port on both nodes and links them.
    pub fn connect(&mut self, u: NodeId, v: NodeId) -> Result<(PortId, PortId), GraphError> {
        let pu = self.open_port(u)?;
        let pv = self.open_port(v)?;
        self.rebind(u, pu, v, pv)?;
        Ok((pu, pv))
    }

    /// Appends a dead port to `id` and returns it.
    pub fn open_port(&mut self, id: NodeId) -> Result<PortId, GraphError> {
        let n = self.node_mut(id).ok_or(GraphError::UnknownNode(id))?;
        n.links.push(None);
        n.buffers.push(PortBuffers::default());
        Ok(PortId(n.links.len() as u32 - 1))
    }

    /// Points `u.pu` at `v.pv` and back.
    pub fn rebind(&mut self, u: NodeId, pu: PortId, v: NodeId, pv: PortId) -> Result<(), GraphError> {
        for (a, pa, b, pb) in [(u, pu, v, pv), (v, pv, u, pu)] {
            let n = self.node_mut(a).ok_or(GraphError::UnknownNode(a))?;
            while n.links.len() <= pa.index() {
                n.links.push(None);
                n.buffers.push(PortBuffers::default());
            }
            n.links[pa.index()] = Some(PortLink { node: b, port: pb });
        }
        Ok(())
    }

    /// Marks a port dead.
    pub fn kill_port(&mut self, id: NodeId, port: PortId) {
        if let Some(n) = self.node_mut(id) {
            if let Some(l) = n.links.get_mut(port.index()) {
                *l = None;
            }
        }
    }
}

fn check_connected(ids: &BTreeSet<NodeId>, edges: &[(NodeId, NodeId)]) -> Result<(), GraphError> {
    let mut adj: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for &(u, v) in edges {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let start = *ids.iter().next().expect("non-empty");
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in adj.get(&u).map(|v| v.as_slice()).unwrap_or(&[]) {
            if seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    match ids.iter().find(|id| !seen.contains(id)) {
        Some(&other) => Err(GraphError::Disconnected(start, other)),
        None => Ok(()),
    }
}
