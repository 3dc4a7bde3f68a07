//! Synchronous-round engine for compact message passing.
//!
//! Every node owns one in-buffer and one out-buffer per port. At a round
//! boundary out-buffers move into the paired in-buffers, then each node's
//! handler runs once, reading (and clearing) in-buffers and writing
//! out-buffers at most once per port.

mod meter;
mod network;
mod policy;
mod round;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use meter::{MemoryMeter, MeterError};
pub use network::{
    big_message_budget, small_message_budget, word_bits_for, GraphError, KernelConfig, Network, Node,
    PortAssignment, PortBuffers, PortLink, TranscriptEntry,
};
pub use policy::{ReadOrderPolicy, StrongOrder};
pub use round::{run_stage, Fault, FaultKind, NodeCtx, ReadSupport, RoundReport, SimError, StageReport};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PortId(pub u32);

impl PortId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A message as the kernel sees it: a tag plus some number of words.
pub trait Payload: Clone + fmt::Debug {
    /// Words carried besides the tag. Ids, ports, counters and light-path
    /// entries cost one word each.
    fn words(&self) -> u64;

    fn kind(&self) -> &'static str;

    /// 8 tag bits plus one word per carried field.
    fn bit_size(&self, word_bits: u32) -> u64 {
        8 + self.words() * word_bits as u64
    }
}

/// Persistent per-node state, measured in words.
pub trait Footprint {
    fn footprint_words(&self) -> u64;
}

impl Footprint for () {
    fn footprint_words(&self) -> u64 {
        0
    }
}

impl Payload for u64 {
    fn words(&self) -> u64 {
        1
    }

    fn kind(&self) -> &'static str {
        "u64"
    }
}
