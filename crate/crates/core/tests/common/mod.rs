#![allow(dead_code)]

pub mod sched;

use cmpnet::harness::{EdgeList, GraphStats};
use cmpnet::kernel::{KernelConfig, Network, NodeId, PortAssignment, ReadOrderPolicy, StageReport};
use cmpnet::protocols::{
    bfs_tree, build_heavy_intervals, convergecast_weights, dfs_rename, leader_election, light_paths_big,
    light_paths_small, run_preprocessing_pipeline, LabelVariant, Msg, NodeVars, PipelineConfig, PipelineReport,
    WeightMode, WillVariant,
};

pub type Net = Network<NodeVars, Msg>;

pub const CAP: u64 = 1 << 20;

pub fn net_of(g: &EdgeList, assignment: PortAssignment) -> Net {
    Network::build(&g.nodes, &g.edges, assignment, Some(KernelConfig::for_size(g.n()))).unwrap()
}

pub fn star(center: u64, leaves: impl IntoIterator<Item = u64>) -> EdgeList {
    EdgeList::from_edges(leaves.into_iter().map(|l| (center, l)).collect())
}

/// A star whose center has the largest id, so that it becomes the root.
pub fn rooted_star(delta: u64) -> EdgeList {
    star(delta + 1, 1..=delta)
}

pub fn diameter(g: &EdgeList) -> u64 {
    GraphStats::of(g).diameter
}

/// Stages up to and including the DFS labels and heavy intervals.
pub fn labeled(g: &EdgeList, assignment: PortAssignment, b: u64) -> Net {
    let mut net = net_of(g, assignment);
    let p = ReadOrderPolicy::NodeChosen;
    leader_election(&mut net, &p, diameter(g)).unwrap();
    bfs_tree(&mut net, &p, CAP).unwrap();
    convergecast_weights(&mut net, &p, b, WeightMode::Broadcast, CAP).unwrap();
    dfs_rename(&mut net, &p, CAP).unwrap();
    build_heavy_intervals(&mut net, &p).unwrap();
    net
}

pub fn with_paths(g: &EdgeList, assignment: PortAssignment, labels: LabelVariant) -> (Net, StageReport) {
    let mut net = labeled(g, assignment, 2);
    let p = ReadOrderPolicy::NodeChosen;
    let r = match labels {
        LabelVariant::Big => light_paths_big(&mut net, &p, CAP).unwrap(),
        LabelVariant::Small => light_paths_small(&mut net, &p, CAP).unwrap(),
    };
    (net, r)
}

pub fn full(
    g: &EdgeList,
    assignment: PortAssignment,
    policy: &ReadOrderPolicy<Msg>,
    labels: LabelVariant,
    wills: WillVariant,
) -> (Net, PipelineReport) {
    let mut net = net_of(g, assignment);
    let cfg = PipelineConfig {
        labels,
        wills,
        ..Default::default()
    };
    let r = run_preprocessing_pipeline(&mut net, policy, &cfg, diameter(g)).unwrap();
    (net, r)
}

pub fn root_of(net: &Net) -> NodeId {
    net.nodes().iter().find(|n| n.vars().is_root()).unwrap().id()
}

/// Root `ROOT` (largest id) above `X`, which has `delta` children; then
/// `extra` more nodes hang off random nodes other than `X`.
pub const ROOT: u64 = 1_000_000_000;
pub const X: u64 = 999_999_999;

pub fn hub_tree(delta: u64, extra: u64, seed: u64) -> EdgeList {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut edges = vec![(ROOT, X)];
    let mut attach: Vec<u64> = vec![ROOT];
    for c in 1..=delta {
        edges.push((X, c));
        attach.push(c);
    }
    for i in 0..extra {
        let id = delta + 1 + i;
        let at = attach[rng.gen_range(0..attach.len())];
        edges.push((at, id));
        attach.push(id);
    }
    EdgeList::from_edges(edges)
}

/// Checks the healed structure against the literal half-full tree over the
/// children of the deleted node. `kids[k]` is child `k` in walk order.
pub fn rt_matches_oracle(
    report: &cmpnet::routing::HealReport,
    kids: &[NodeId],
) -> Result<(), String> {
    use cmpnet::hft::{HtOracle, NodeKind};
    use cmpnet::routing::Place;
    use std::collections::BTreeSet;
    type End = Option<(NodeKind, u64)>;
    let index: std::collections::HashMap<NodeId, u64> =
        kids.iter().enumerate().map(|(k, &id)| (id, k as u64)).collect();
    let end = |p: Place| -> Result<End, String> {
        match p {
            Place::Real(id) if id == report.parent => Ok(None),
            Place::Real(id) => index.get(&id).map(|&k| Some((NodeKind::Leaf, k))).ok_or(format!("stray {id}")),
            Place::Virtual(id) => index.get(&id).map(|&k| Some((NodeKind::NonLeaf, k))).ok_or(format!("stray {id}")),
        }
    };
    let mut got: BTreeSet<(End, End)> = BTreeSet::new();
    for e in &report.rt_edges {
        got.insert((end(e.parent)?, end(e.child)?));
    }
    let ht = HtOracle::build(0, kids.len() as u64 - 1).map_err(|e| e.to_string())?;
    let mut want: BTreeSet<(End, End)> = BTreeSet::new();
    for o in ht.reachable().into_iter().map(|i| &ht.nodes[i]) {
        let me = Some((o.kind, o.label));
        let up = o.parent.map(|i| (ht.nodes[i].kind, ht.nodes[i].label));
        want.insert((up, me));
    }
    if got.len() != report.rt_edges.len() {
        return Err("duplicate RT edges".into());
    }
    if got != want {
        return Err(format!("RT edges {got:?} != oracle {want:?}"));
    }
    Ok(())
}

/// Children of `x` in walk order.
pub fn kids_of(net: &Net, x: NodeId) -> Vec<NodeId> {
    let tree = cmpnet::harness::oracle::TreeView::from_network(net).unwrap();
    cmpnet::harness::oracle::walk_order(net, &tree, x).into_iter().map(|e| e.1).collect()
}
