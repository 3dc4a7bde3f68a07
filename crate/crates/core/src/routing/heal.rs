use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::hft::NodeKind;
use crate::kernel::{NodeId, Network, PortId, SimError};
use crate::protocols::{Msg, NodeVars, SubWill, WillRef};

/// A real node or the virtual RT node hosted by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Place {
    Real(NodeId),
    Virtual(NodeId),
}

impl Place {
    pub fn host(self) -> NodeId {
        match self {
            Place::Real(n) | Place::Virtual(n) => n,
        }
    }
}

/// Link out of a virtual node. `port` is `None` when both ends share a host.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Link {
    pub port: Option<PortId>,
    pub to: Place,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualNode {
    pub host: NodeId,
    pub index_label: u64,
    /// `None` never occurs after healing: the RT root links to the deleted
    /// node's parent.
    pub parent_link: Option<Link>,
    pub left_link: Link,
    pub right_link: Link,
    pub is_root: bool,
    /// `[d, NewId]` of the deleted node.
    pub span: (u64, u64),
    /// Label of the host, the right end of leaf `index_label`'s interval.
    pub host_new_id: u64,
}

/// Healing state a child of the deleted node keeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealVars {
    pub deleted: NodeId,
    pub rt_index: u64,
    /// The leaf's RT parent is the virtual node hosted here.
    pub parent_internal: bool,
    pub virtual_node: Option<VirtualNode>,
}

impl HealVars {
    pub fn words(&self) -> u64 {
        3 + self.virtual_node.as_ref().map_or(0, |_| 12)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RtEdge {
    pub parent: Place,
    pub child: Place,
    pub parent_port: Option<PortId>,
    pub child_port: Option<PortId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealReport {
    pub deleted: NodeId,
    pub parent: NodeId,
    pub delta: u64,
    /// Host and index of the RT root, if the RT has a non-leaf.
    pub rt_root: Option<(NodeId, u64)>,
    pub virtual_nodes: u64,
    pub rt_edges: Vec<RtEdge>,
    pub degree_deltas: BTreeMap<NodeId, i64>,
}

impl HealReport {
    pub fn max_degree_delta(&self) -> i64 {
        self.degree_deltas.values().copied().max().unwrap_or(0)
    }
}

fn place_of(r: &WillRef) -> Place {
    match r.kind {
        NodeKind::Leaf => Place::Real(r.id),
        NodeKind::NonLeaf => Place::Virtual(r.id),
    }
}

/// Deletes `x` and lets its children rebuild around it from their subwills.
///
/// Supported scope: one deletion per network, of a non-root node with
/// children that all hold a subwill from it.
pub fn execute_will(net: &mut Network<NodeVars, Msg>, x: NodeId) -> Result<HealReport, SimError> {
    let unsupported = |m: String| Err(SimError::Unsupported(m));
    if net.removed_count() > 0 {
        return unsupported("only a single deletion per network is supported".into());
    }
    let Some(xv) = net.vars(x).cloned() else {
        return unsupported(format!("node {x} does not exist"));
    };
    let (Some(p), Some(xpp)) = (xv.parent, xv.parent_port) else {
        return unsupported(format!("node {x} is the root"));
    };
    if xv.delta == 0 {
        return unsupported(format!("node {x} is a leaf"));
    }
    let span = (xv.d_v, xv.new_id);
    let q = net
        .link(x, xpp)
        .filter(|l| l.node == p)
        .map(|l| l.port)
        .ok_or_else(|| SimError::Unsupported(format!("parent link of {x} is gone")))?;

    // Children by will index, with their port toward x.
    let mut children: BTreeMap<u64, (NodeId, PortId, SubWill)> = BTreeMap::new();
    for n in net.nodes() {
        let v = n.vars();
        if v.parent != Some(x) {
            continue;
        }
        match (&v.will, v.parent_port) {
            (Some(w), Some(pp)) if w.span == span && w.delta == xv.delta => {
                children.insert(w.index, (n.id(), pp, w.clone()));
            }
            _ => return unsupported(format!("child {} of {x} holds no will from it", n.id())),
        }
    }
    if children.len() as u64 != xv.delta || children.keys().copied().ne(0..xv.delta) {
        return unsupported(format!("children of {x} do not hold a complete set of wills"));
    }

    let before: BTreeMap<NodeId, i64> = net.nodes().iter().map(|n| (n.id(), n.degree() as i64)).collect();
    net.remove_node(x)?;

    // RT edges, each listed once from its child end.
    let mut edges: Vec<(Place, Place)> = Vec::new();
    for (id, _, w) in children.values() {
        let leaf_parent = w.leaf_parent.as_ref().map_or(Place::Real(p), place_of);
        edges.push((leaf_parent, Place::Real(*id)));
        if w.left.is_some() {
            let up = w.nonleaf_parent.as_ref().map_or(Place::Real(p), place_of);
            edges.push((up, Place::Virtual(*id)));
        }
    }

    let old_port: BTreeMap<NodeId, PortId> = children.values().map(|(id, pp, _)| (*id, *pp)).collect();
    let mut rt_edges = Vec::with_capacity(edges.len());
    for (parent, child) in edges {
        if parent.host() == child.host() {
            rt_edges.push(RtEdge {
                parent,
                child,
                parent_port: None,
                child_port: None,
            });
            continue;
        }
        let child_port = match child {
            Place::Real(c) => old_port[&c],
            Place::Virtual(c) => net.open_port(c)?,
        };
        let parent_port = match parent {
            Place::Real(pp) if pp == p => q,
            _ => net.open_port(parent.host())?,
        };
        net.rebind(parent.host(), parent_port, child.host(), child_port)?;
        rt_edges.push(RtEdge {
            parent,
            child,
            parent_port: Some(parent_port),
            child_port: Some(child_port),
        });
    }

    // Install per-child state.
    let link_up = |child: Place| {
        rt_edges.iter().find(|e| e.child == child).map(|e| Link {
            port: e.child_port,
            to: e.parent,
        })
    };
    let link_down = |parent: Place, child: Place| {
        rt_edges
            .iter()
            .find(|e| e.parent == parent && e.child == child)
            .map(|e| Link {
                port: e.parent_port,
                to: e.child,
            })
    };
    let mut rt_root = None;
    let mut virtual_nodes = 0;
    for (&k, (id, _, w)) in &children {
        let up = link_up(Place::Real(*id)).expect("every leaf has an RT parent");
        let virtual_node = match (&w.left, &w.right) {
            (Some(l), Some(r)) => {
                let me = Place::Virtual(*id);
                let vn = VirtualNode {
                    host: *id,
                    index_label: k,
                    parent_link: link_up(me),
                    left_link: link_down(me, place_of(l)).expect("left RT edge"),
                    right_link: link_down(me, place_of(r)).expect("right RT edge"),
                    is_root: w.nonleaf_parent.is_none(),
                    span,
                    host_new_id: 0,
                };
                if vn.is_root {
                    rt_root = Some((*id, k));
                }
                virtual_nodes += 1;
                Some(vn)
            }
            _ => None,
        };
        let v = net.vars_mut(*id).expect("child survives");
        // With an internal parent the old port toward x stays dead.
        let internal = up.port.is_none();
        v.parent = Some(up.to.host());
        v.parent_port = up.port;
        let host_new_id = v.new_id;
        v.heal = Some(HealVars {
            deleted: x,
            rt_index: k,
            parent_internal: internal,
            virtual_node: virtual_node.map(|vn| VirtualNode { host_new_id, ..vn }),
        });
    }
    let new_top = rt_root.map_or(children[&0].0, |(h, _)| h);
    if let Some(pv) = net.vars_mut(p) {
        for c in pv.heavy_children.iter_mut() {
            if *c == x {
                *c = new_top;
            }
        }
    }

    let degree_deltas = net
        .nodes()
        .iter()
        .map(|n| (n.id(), n.degree() as i64 - before.get(&n.id()).copied().unwrap_or(0)))
        .collect();
    Ok(HealReport {
        deleted: x,
        parent: p,
        delta: xv.delta,
        rt_root,
        virtual_nodes,
        rt_edges,
        degree_deltas,
    })
}
