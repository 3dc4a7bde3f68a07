use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cmpnet::harness::Generator;
use cmpnet::kernel::{Footprint, KernelConfig, Network, NodeId, PortAssignment, PortId, ReadOrderPolicy};

#[derive(Debug, Clone, Default)]
pub struct Log {
    pub reads: Vec<(u64, PortId, Option<u64>)>,
    pub sends: Vec<(u64, PortId, u64)>,
}

impl Footprint for Log {
    fn footprint_words(&self) -> u64 {
        0
    }
}

pub fn network(n: u64, seed: u64, strict: bool) -> Network<Log, u64> {
    let g = Generator::GnpConnected { n, p: 0.4, seed }.generate().unwrap();
    let mut cfg = KernelConfig::for_size(g.n());
    cfg.strict = strict;
    cfg.message_budget_bits = u64::MAX;
    Network::build(&g.nodes, &g.edges, PortAssignment::Gapped(seed), Some(cfg)).unwrap()
}

/// Decision stream private to one (node, round) so schedules replay exactly.
pub fn coin(seed: u64, round: u64, node: NodeId) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ round.wrapping_mul(0x9e37_79b9) ^ node.0.wrapping_mul(0x85eb_ca6b))
}

pub fn tag(round: u64, node: NodeId, port: PortId) -> u64 {
    (round << 40) | (node.0 << 20) | port.0 as u64
}

/// Random pull reads and sends; checks every read against a buffer model
/// where a send lands one round later, overwrites, and a read clears.
pub fn pull_schedule(n: u64, seed: u64, rounds: u64) -> Result<(), TestCaseError> {
    let mut net = network(n, seed, true);
    for _ in 0..rounds {
        net.run_round(&ReadOrderPolicy::NodeChosen, |ctx| {
            let (id, r) = (ctx.id(), ctx.round());
            let mut rng = coin(seed, r, id);
            for p in ctx.live_ports() {
                if rng.gen_bool(0.5) {
                    let got = ctx.receive(p);
                    ctx.vars_mut().reads.push((r, p, got));
                }
                if rng.gen_bool(0.5) {
                    ctx.send(p, tag(r, id, p));
                    ctx.vars_mut().sends.push((r, p, tag(r, id, p)));
                }
            }
        })
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    }

    let mut sends: Vec<(u64, NodeId, PortId, u64)> = Vec::new();
    let mut reads: HashMap<(u64, NodeId, PortId), Option<u64>> = HashMap::new();
    for node in net.nodes() {
        for &(r, p, m) in &node.vars().sends {
            sends.push((r, node.id(), p, m));
        }
        for &(r, p, m) in &node.vars().reads {
            reads.insert((r, node.id(), p), m);
        }
    }
    let mut inbuf: HashMap<(NodeId, PortId), u64> = HashMap::new();
    for r in 1..=rounds {
        for &(sr, u, p, m) in &sends {
            if sr + 1 == r {
                let l = net.link(u, p).unwrap();
                inbuf.insert((l.node, l.port), m);
            }
        }
        for id in net.node_ids() {
            for p in net.node(id).unwrap().live_ports() {
                if let Some(got) = reads.get(&(r, id, p)) {
                    let want = inbuf.remove(&(id, p));
                    prop_assert_eq!(*got, want, "round {} node {} port {}", r, id, p);
                }
            }
        }
    }
    Ok(())
}

/// Per node: (round, port, message) for every read.
pub type ReadLog = Vec<(NodeId, Vec<(u64, PortId, Option<u64>)>)>;

/// Streamed reads under a random adversary; returns the full read log.
pub fn stream_schedule(n: u64, seed: u64, rounds: u64) -> ReadLog {
    let mut net = network(n, seed, true);
    net.set_record_transcript(true);
    for _ in 0..rounds {
        net.run_round(&ReadOrderPolicy::RandomAdversary(seed), |ctx| {
            let (id, r) = (ctx.id(), ctx.round());
            let mut rng = coin(seed, r, id);
            while let Some((p, m)) = ctx.next_delivery() {
                ctx.vars_mut().reads.push((r, p, Some(m)));
            }
            for p in ctx.live_ports() {
                if rng.gen_bool(0.6) {
                    ctx.send(p, tag(r, id, p));
                }
            }
        })
        .unwrap();
    }
    net.nodes().iter().map(|n| (n.id(), n.vars().reads.clone())).collect()
}
