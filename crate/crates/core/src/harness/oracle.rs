//! Centralized recomputation of everything the preprocessing pipeline
//! builds, used to audit a labeled network.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::hft::HtOracle;
use crate::kernel::{Network, NodeId, PortId};
use crate::protocols::{Msg, NodeVars, SubWill, WillRef};

/// Parent-pointer tree read out of the node variables.
#[derive(Debug, Clone)]
pub struct TreeView {
    pub root: NodeId,
    pub parent: HashMap<NodeId, NodeId>,
    /// Children with the parent-side port, in port order.
    pub children: BTreeMap<NodeId, Vec<(PortId, NodeId)>>,
    pub depth: HashMap<NodeId, u64>,
}

impl TreeView {
    /// Fails unless the parent pointers form one spanning tree over tree edges.
    pub fn from_network(net: &Network<NodeVars, Msg>) -> Result<Self, String> {
        let roots: Vec<NodeId> = net.nodes().iter().filter(|n| n.vars().is_root()).map(|n| n.id()).collect();
        let [root] = roots[..] else {
            return Err(format!("expected one root, found {}", roots.len()));
        };
        let mut parent = HashMap::new();
        let mut children: BTreeMap<NodeId, Vec<(PortId, NodeId)>> =
            net.node_ids().map(|id| (id, Vec::new())).collect();
        for n in net.nodes() {
            let v = n.vars();
            let (Some(p), Some(pp)) = (v.parent, v.parent_port) else {
                continue;
            };
            let link = net.link(n.id(), pp).ok_or_else(|| format!("{}: parent port {pp} is dead", n.id()))?;
            if link.node != p {
                return Err(format!("{}: parent port leads to {}, not {p}", n.id(), link.node));
            }
            parent.insert(n.id(), p);
            children.entry(p).or_default().push((link.port, n.id()));
        }
        for c in children.values_mut() {
            c.sort();
        }
        let mut depth = HashMap::from([(root, 0)]);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(_, c) in &children[&u] {
                if depth.insert(c, depth[&u] + 1).is_some() {
                    return Err(format!("node {c} reached twice"));
                }
                queue.push_back(c);
            }
        }
        if depth.len() != net.len() {
            return Err(format!("tree spans {} of {} nodes", depth.len(), net.len()));
        }
        Ok(TreeView {
            root,
            parent,
            children,
            depth,
        })
    }

    pub fn kids(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.children.get(&v).into_iter().flatten().map(|&(_, c)| c)
    }

    pub fn distance(&self, mut a: NodeId, mut b: NodeId) -> u64 {
        let mut hops = 0;
        while self.depth[&a] > self.depth[&b] {
            a = self.parent[&a];
            hops += 1;
        }
        while self.depth[&b] > self.depth[&a] {
            b = self.parent[&b];
            hops += 1;
        }
        while a != b {
            a = self.parent[&a];
            b = self.parent[&b];
            hops += 2;
        }
        hops
    }

    /// Nodes in an order where every parent precedes its children.
    pub fn top_down(&self) -> Vec<NodeId> {
        let mut order = vec![self.root];
        let mut i = 0;
        while i < order.len() {
            order.extend(self.kids(order[i]));
            i += 1;
        }
        order
    }

    /// Leaf count under every node.
    pub fn leaf_counts(&self) -> HashMap<NodeId, u64> {
        let mut wt = HashMap::new();
        for v in self.top_down().into_iter().rev() {
            let s: u64 = self.kids(v).map(|c| wt[&c]).sum();
            wt.insert(v, s.max(1));
        }
        wt
    }
}

/// Labels a sequential heavy-first post-order walk assigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpectedLabel {
    pub new_id: u64,
    pub d_v: u64,
    pub c_v: u64,
    /// Index among the parent's children in walk order.
    pub sibling_index: Option<u64>,
}

/// Walk order of `v`'s children: heavy ones as recorded, then light ones by port.
pub fn walk_order(net: &Network<NodeVars, Msg>, tree: &TreeView, v: NodeId) -> Vec<(PortId, NodeId)> {
    let vars = net.vars(v).expect("node in tree");
    let mut order: Vec<(PortId, NodeId)> = vars
        .heavy_ports
        .iter()
        .zip(&vars.heavy_children)
        .map(|(&p, &c)| (p, c))
        .collect();
    order.extend(
        tree.children[&v]
            .iter()
            .filter(|(p, _)| !vars.heavy_ports.contains(p))
            .copied(),
    );
    order
}

pub fn expected_labels(net: &Network<NodeVars, Msg>, tree: &TreeView) -> HashMap<NodeId, ExpectedLabel> {
    let mut out = HashMap::new();
    let mut next = 1u64;
    // (node, child cursor, first label, c_v once the heavy part is done)
    let mut stack: Vec<(NodeId, usize, u64)> = vec![(tree.root, 0, next)];
    let mut sib: HashMap<NodeId, u64> = HashMap::new();
    let mut cvs: HashMap<NodeId, u64> = HashMap::new();
    while let Some(&mut (v, ref mut cur, d)) = stack.last_mut() {
        let order = walk_order(net, tree, v);
        let n_heavy = net.vars(v).map_or(0, |x| x.heavy_ports.len());
        if *cur == n_heavy {
            cvs.entry(v).or_insert(next);
        }
        if *cur < order.len() {
            let c = order[*cur].1;
            sib.insert(c, *cur as u64);
            *cur += 1;
            stack.push((c, 0, next));
        } else {
            cvs.entry(v).or_insert(next);
            out.insert(
                v,
                ExpectedLabel {
                    new_id: next,
                    d_v: d,
                    c_v: cvs[&v],
                    sibling_index: sib.get(&v).copied(),
                },
            );
            next += 1;
            stack.pop();
        }
    }
    out
}

/// Parent-side ports of the light nodes on each root-to-node path.
pub fn expected_light_paths(net: &Network<NodeVars, Msg>, tree: &TreeView) -> HashMap<NodeId, Vec<PortId>> {
    let mut out = HashMap::from([(tree.root, Vec::new())]);
    for v in tree.top_down() {
        for &(p, c) in &tree.children[&v] {
            let mut path = out[&v].clone();
            if !net.vars(c).is_some_and(|x| x.is_heavy) {
                path.push(p);
            }
            out.insert(c, path);
        }
    }
    out
}

/// The subwill child `k` of a parent with children `ids` should hold,
/// read straight off `ht`, the literal half-full tree over `[0, len - 1]`.
pub fn expected_subwill(ht: &HtOracle, ids: &[NodeId], k: u64, span: (u64, u64)) -> SubWill {
    let delta = ids.len() as u64;
    let at = |i: usize| {
        let o = &ht.nodes[i];
        WillRef {
            kind: o.kind,
            index: o.label,
            id: ids[o.label as usize],
        }
    };
    let leaf = ht.leaf(k).expect("every index is a leaf");
    let nonleaf = ht.nonleaf(k);
    SubWill {
        index: k,
        delta,
        leaf_parent: ht.nodes[leaf].parent.map(at),
        nonleaf_parent: nonleaf.and_then(|i| ht.nodes[i].parent).map(at),
        left: nonleaf.and_then(|i| ht.nodes[i].left).map(at),
        right: nonleaf.and_then(|i| ht.nodes[i].right).map(at),
        span,
    }
}

/// Every discrepancy between the network's state and the oracles.
pub fn audit_preprocessing(net: &Network<NodeVars, Msg>, b: u64) -> Vec<String> {
    let tree = match TreeView::from_network(net) {
        Ok(t) => t,
        Err(e) => return vec![e],
    };
    let mut bad = Vec::new();
    let wt = tree.leaf_counts();
    let labels = expected_labels(net, &tree);
    let paths = expected_light_paths(net, &tree);
    for n in net.nodes() {
        let (id, v) = (n.id(), n.vars());
        if v.wt != wt[&id] {
            bad.push(format!("{id}: wt {} != {}", v.wt, wt[&id]));
        }
        let heavy_expected = match tree.parent.get(&id) {
            None => true,
            Some(p) => b * wt[&id] >= wt[p],
        };
        if v.is_heavy != heavy_expected {
            bad.push(format!("{id}: is_heavy {}", v.is_heavy));
        }
        if v.heavy_ports.len() as u64 > b {
            bad.push(format!("{id}: {} heavy children > b", v.heavy_ports.len()));
        }
        let hk: Vec<NodeId> = tree.kids(id).filter(|c| net.vars(*c).is_some_and(|x| x.is_heavy)).collect();
        if hk.len() != v.heavy_children.len() || hk.iter().any(|c| !v.heavy_children.contains(c)) {
            bad.push(format!("{id}: heavy children {:?} != {hk:?}", v.heavy_children));
        }
        let e = labels[&id];
        if (v.new_id, v.d_v, v.c_v, v.sibling_index) != (e.new_id, e.d_v, e.c_v, e.sibling_index) {
            bad.push(format!(
                "{id}: (new_id, d, c, idx) = ({}, {}, {}, {:?}), expected ({}, {}, {}, {:?})",
                v.new_id, v.d_v, v.c_v, v.sibling_index, e.new_id, e.d_v, e.c_v, e.sibling_index
            ));
        }
        for (i, &c) in v.heavy_children.iter().enumerate() {
            let ce = labels.get(&c);
            if ce.map(|l| (l.d_v, l.new_id)) != v.heavy_intervals.get(i).copied() {
                bad.push(format!("{id}: interval of heavy child {c} wrong"));
            }
        }
        if v.light_path != paths[&id] || v.light_level != paths[&id].len() as u64 {
            bad.push(format!("{id}: light path {:?} != {:?}", v.light_path, paths[&id]));
        }
        let order = walk_order(net, &tree, id);
        if v.delta != order.len() as u64 {
            bad.push(format!("{id}: delta {} != {}", v.delta, order.len()));
        }
        if v.fst_port != order.first().map(|e| e.0) {
            bad.push(format!("{id}: fst_port {:?}", v.fst_port));
        }
        for (i, &(_, c)) in order.iter().enumerate() {
            let want = order.get(i + 1).map(|e| e.0);
            if net.vars(c).and_then(|x| x.nxt_port) != want {
                bad.push(format!("{c}: nxt_port should be {want:?}"));
            }
        }
    }
    bad.extend(audit_wills(net, &tree));
    bad
}

pub fn audit_wills(net: &Network<NodeVars, Msg>, tree: &TreeView) -> Vec<String> {
    let mut bad = Vec::new();
    for n in net.nodes() {
        let order = walk_order(net, tree, n.id());
        if order.is_empty() {
            continue;
        }
        let ids: Vec<NodeId> = order.iter().map(|e| e.1).collect();
        let span = (n.vars().d_v, n.vars().new_id);
        let ht = HtOracle::build(0, ids.len() as u64 - 1).expect("non-empty interval");
        for (k, &c) in ids.iter().enumerate() {
            let want = expected_subwill(&ht, &ids, k as u64, span);
            match net.vars(c).and_then(|x| x.will.as_ref()) {
                Some(got) if *got == want => {}
                got => bad.push(format!("{c}: subwill {got:?}, expected {want:?}")),
            }
        }
    }
    bad
}
