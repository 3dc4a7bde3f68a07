use serde::{Deserialize, Serialize};

use crate::hft::NodeKind;
use crate::kernel::{Footprint, NodeId, Payload, PortId};
use crate::routing::HealVars;

/// One named slot of a subwill: which child (by index and ID) and whether
/// its leaf or non-leaf copy is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WillRef {
    pub kind: NodeKind,
    pub index: u64,
    pub id: NodeId,
}

/// A child's slice of its parent's reconstruction tree, with IDs resolved.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubWill {
    pub index: u64,
    pub delta: u64,
    /// Parent of this child's leaf copy (absent when the parent has one child).
    pub leaf_parent: Option<WillRef>,
    /// Parent of this child's non-leaf copy (absent for the RT root).
    pub nonleaf_parent: Option<WillRef>,
    pub left: Option<WillRef>,
    pub right: Option<WillRef>,
    /// `[d, NewId]` of the node that wrote the will.
    pub span: (u64, u64),
}

impl SubWill {
    pub fn words(&self) -> u64 {
        // index, delta, span, one word of kind flags, two words per named slot
        let slots = [self.leaf_parent, self.nonleaf_parent, self.left, self.right]
            .iter()
            .flatten()
            .count() as u64;
        5 + 2 * slots
    }

    pub fn is_rt_root(&self) -> bool {
        self.left.is_some() && self.nonleaf_parent.is_none()
    }
}

/// DFS token and its control messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    /// Probe/enter: the next unassigned label and the index the receiver
    /// would get among the sender's children.
    Down { next: u64, index: u64 },
    /// Subtree finished; `next` is one past the child's label.
    Up { next: u64 },
    /// The probed neighbor is not a child.
    Bounce,
    /// The receiver's next sibling sits behind this port of the parent.
    SetNext(PortId),
    AckNext,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Msg {
    Leader(NodeId),
    Join(NodeId),
    Yes,
    Weight(u64),
    ParentWeight(u64),
    WeightQuery { weight: u64, id: NodeId },
    WeightReply { heavy: bool, id: NodeId },
    Token(Token),
    Interval { lo: u64, hi: u64 },
    Rl { path: Vec<PortId>, port: PortId },
    PortNo(PortId),
    PortAnnounce(PortId),
    RootDone,
    WillReq,
    ChildInfo { id: NodeId, nxt_port: Option<PortId>, index: u64 },
    SubWill(SubWill),
}

impl Payload for Msg {
    fn words(&self) -> u64 {
        match self {
            Msg::Yes | Msg::RootDone | Msg::WillReq => 0,
            Msg::Leader(_) | Msg::Join(_) | Msg::Weight(_) | Msg::ParentWeight(_) => 1,
            Msg::PortNo(_) | Msg::PortAnnounce(_) => 1,
            Msg::WeightQuery { .. } | Msg::WeightReply { .. } => 2,
            Msg::Token(t) => match t {
                Token::Down { .. } => 2,
                Token::Up { .. } | Token::SetNext(_) => 1,
                Token::Bounce | Token::AckNext => 0,
            },
            Msg::Interval { .. } => 2,
            Msg::Rl { path, .. } => path.len() as u64 + 1,
            Msg::ChildInfo { .. } => 3,
            Msg::SubWill(s) => s.words(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Msg::Leader(_) => "LEADER",
            Msg::Join(_) => "JOIN",
            Msg::Yes => "YES",
            Msg::Weight(_) => "WT",
            Msg::ParentWeight(_) => "PARENT_WT",
            Msg::WeightQuery { .. } => "WT_QUERY",
            Msg::WeightReply { .. } => "WT_REPLY",
            Msg::Token(_) => "TOKEN",
            Msg::Interval { .. } => "INTERVAL",
            Msg::Rl { .. } => "RL",
            Msg::PortNo(_) => "PORT_NO",
            Msg::PortAnnounce(_) => "PORT_ANNOUNCE",
            Msg::RootDone => "ROOT_DONE",
            Msg::WillReq => "WILL_REQ",
            Msg::ChildInfo { .. } => "CHILD_INFO",
            Msg::SubWill(_) => "SUBWILL",
        }
    }
}

/// Which way the DFS cursor is probing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DfsCursor {
    #[default]
    Idle,
    Heavy(usize),
    Light(Option<PortId>),
    Finished,
}

/// Transient per-stage state. Cleared between stages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scratch {
    pub flag_a: bool,
    pub flag_b: bool,
    pub flag_c: bool,
    pub counter_a: u64,
    pub counter_b: u64,
    pub value: u64,
    pub until_round: u64,
    pub cursor: DfsCursor,
    pub prev_port: Option<PortId>,
}

impl Scratch {
    const WORDS: u64 = 8;
}

/// Everything a node keeps between rounds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeVars {
    pub leader_id: NodeId,
    pub is_leader: bool,

    pub parent: Option<NodeId>,
    pub parent_port: Option<PortId>,
    pub joined: bool,
    pub n_child: u64,
    pub count: u64,
    pub join_round: u64,

    pub wt: u64,
    pub is_heavy: bool,
    /// Heavy children, aligned with `heavy_ports`, ordered by port.
    pub heavy_children: Vec<NodeId>,
    pub heavy_ports: Vec<PortId>,
    /// `[d, NewId]` of each heavy child, aligned with `heavy_ports`.
    pub heavy_intervals: Vec<(u64, u64)>,

    pub new_id: u64,
    pub d_v: u64,
    pub c_v: u64,
    pub fst_port: Option<PortId>,
    pub nxt_port: Option<PortId>,
    pub delta: u64,
    /// Position among the parent's children in walk order.
    pub sibling_index: Option<u64>,

    pub light_path: Vec<PortId>,
    pub light_level: u64,
    pub has_path: bool,

    pub will: Option<SubWill>,
    /// Largest number of will scratch slots held at once while acting as parent.
    pub will_peak_slots: u64,
    /// Largest number of plain child IDs held at once while acting as parent.
    pub will_peak_ids: u64,

    pub heal: Option<HealVars>,

    pub done: bool,
    pub scratch: Scratch,
}

impl NodeVars {
    /// Scalar words: ids, ports, counters and labels, plus one for all flags.
    const SCALAR_WORDS: u64 = 20;

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    /// Index of `port` in the heavy arrays.
    pub fn heavy_slot(&self, port: PortId) -> Option<usize> {
        self.heavy_ports.iter().position(|&p| p == port)
    }

    pub fn label(&self) -> (u64, &[PortId]) {
        (self.new_id, &self.light_path)
    }
}

impl Footprint for NodeVars {
    fn footprint_words(&self) -> u64 {
        Self::SCALAR_WORDS
            + Scratch::WORDS
            + self.heavy_children.len() as u64
            + self.heavy_ports.len() as u64
            + 2 * self.heavy_intervals.len() as u64
            + self.light_path.len() as u64
            + self.will.as_ref().map_or(0, SubWill::words)
            + self.heal.as_ref().map_or(0, HealVars::words)
    }
}
