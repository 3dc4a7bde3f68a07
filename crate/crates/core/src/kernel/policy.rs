use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NodeId, PortId};

/// Callback used by a strong adversary: sees the node and its pending
/// `(port, message)` pairs and returns the order in which the ports are read.
pub type StrongOrder<M> = Arc<dyn Fn(NodeId, &[(PortId, &M)]) -> Vec<PortId> + Send + Sync>;

/// Who decides the order in which a node's in-buffers are read in a round.
pub enum ReadOrderPolicy<M> {
    /// Deterministic reads: the node pulls ports itself. Streamed delivery
    /// falls back to ascending port order.
    NodeChosen,
    /// Uniformly random permutation per node and round, reproducible from the seed.
    RandomAdversary(u64),
    /// Adaptive adversary given by a callback.
    StrongAdversary(StrongOrder<M>),
}

impl<M> Clone for ReadOrderPolicy<M> {
    fn clone(&self) -> Self {
        match self {
            ReadOrderPolicy::NodeChosen => ReadOrderPolicy::NodeChosen,
            ReadOrderPolicy::RandomAdversary(s) => ReadOrderPolicy::RandomAdversary(*s),
            ReadOrderPolicy::StrongAdversary(f) => ReadOrderPolicy::StrongAdversary(Arc::clone(f)),
        }
    }
}

impl<M> fmt::Debug for ReadOrderPolicy<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadOrderPolicy::NodeChosen => write!(f, "NodeChosen"),
            ReadOrderPolicy::RandomAdversary(s) => write!(f, "RandomAdversary({s})"),
            ReadOrderPolicy::StrongAdversary(_) => write!(f, "StrongAdversary(..)"),
        }
    }
}

impl<M> ReadOrderPolicy<M> {
    pub fn is_adversarial(&self) -> bool {
        !matches!(self, ReadOrderPolicy::NodeChosen)
    }

    /// A strong adversary that always reads the highest port first.
    pub fn reverse_ports() -> Self {
        ReadOrderPolicy::StrongAdversary(Arc::new(|_, pending: &[(PortId, &M)]| {
            let mut ports: Vec<PortId> = pending.iter().map(|(p, _)| *p).collect();
            ports.sort_unstable_by(|a, b| b.cmp(a));
            ports
        }))
    }

    /// Orders the pending ports of `node` for `round`. `pending` is sorted by port.
    pub(crate) fn order(&self, node: NodeId, round: u64, pending: &[(PortId, &M)]) -> Vec<PortId> {
        match self {
            ReadOrderPolicy::NodeChosen => pending.iter().map(|(p, _)| *p).collect(),
            ReadOrderPolicy::RandomAdversary(seed) => {
                let mut ports: Vec<PortId> = pending.iter().map(|(p, _)| *p).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(mix(*seed, round, node.0));
                ports.shuffle(&mut rng);
                ports
            }
            ReadOrderPolicy::StrongAdversary(f) => f(node, pending),
        }
    }
}

fn mix(seed: u64, round: u64, node: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(round.rotate_left(21))
        ^ node.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pending(n: u32) -> Vec<(PortId, u32)> {
        (0..n).map(|p| (PortId(p), p * 10)).collect()
    }

    #[test]
    fn random_adversary_is_a_replayable_permutation() {
        let msgs = pending(9);
        let view: Vec<(PortId, &u32)> = msgs.iter().map(|(p, m)| (*p, m)).collect();
        let policy = ReadOrderPolicy::<u32>::RandomAdversary(7);
        let a = policy.order(NodeId(3), 5, &view);
        let b = policy.order(NodeId(3), 5, &view);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, (0..9).map(PortId).collect::<Vec<_>>());
    }

    #[test]
    fn strong_adversary_echoes_callback() {
        let msgs = pending(4);
        let view: Vec<(PortId, &u32)> = msgs.iter().map(|(p, m)| (*p, m)).collect();
        let policy = ReadOrderPolicy::<u32>::StrongAdversary(Arc::new(|_, pend: &[(PortId, &u32)]| {
            let mut v: Vec<_> = pend.to_vec();
            v.sort_by(|a, b| b.1.cmp(a.1));
            v.into_iter().map(|(p, _)| p).collect()
        }));
        assert_eq!(
            policy.order(NodeId(1), 1, &view),
            vec![PortId(3), PortId(2), PortId(1), PortId(0)]
        );
    }
}
