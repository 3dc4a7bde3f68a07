//! Per-hop tree routing, reconstruction-tree healing after a deletion, and
//! an observer that walks packets through the (possibly healed) network.

mod heal;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{NodeId, Network, PortId};
use crate::protocols::{Msg, NodeVars};

pub use heal::{execute_will, HealReport, HealVars, Link, Place, RtEdge, VirtualNode};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoutingLabel {
    pub new_id: u64,
    pub light_path: Vec<PortId>,
}

impl RoutingLabel {
    pub fn of(v: &NodeVars) -> Self {
        RoutingLabel {
            new_id: v.new_id,
            light_path: v.light_path.clone(),
        }
    }

    pub fn words(&self) -> u64 {
        1 + self.light_path.len() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum RouteError {
    #[error("label has no light-path entry at level {level}")]
    MalformedLabel { level: u64 },
    #[error("no heavy child interval contains {target}")]
    NoHeavyChild { target: u64 },
    #[error("target {target} is outside the root's interval")]
    OutsideTree { target: u64 },
    #[error("target {target} was deleted")]
    TargetDeleted { target: u64 },
    #[error("link from {0:?} is dangling")]
    Dangling(Place),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no delivery within {0} hops")]
    HopLimit(u64),
}

/// Decision at a real node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Deliver,
    Forward(PortId),
    /// Hand the packet to the virtual node hosted here.
    ToVirtual,
}

/// One routing decision at a real node for target label `w`.
pub fn route_step(v: &NodeVars, w: &RoutingLabel) -> Result<Step, RouteError> {
    let t = w.new_id;
    if t == v.new_id {
        return Ok(Step::Deliver);
    }
    if t < v.d_v || t > v.new_id {
        if v.heal.as_ref().is_some_and(|h| h.parent_internal) {
            return Ok(Step::ToVirtual);
        }
        return v
            .parent_port
            .map(Step::Forward)
            .ok_or(RouteError::OutsideTree { target: t });
    }
    if t >= v.c_v {
        let level = v.light_level;
        return w
            .light_path
            .get(level as usize)
            .map(|&p| Step::Forward(p))
            .ok_or(RouteError::MalformedLabel { level });
    }
    v.heavy_intervals
        .iter()
        .position(|&(lo, hi)| (lo..=hi).contains(&t))
        .map(|i| Step::Forward(v.heavy_ports[i]))
        .ok_or(RouteError::NoHeavyChild { target: t })
}

/// One step at a virtual node. `from_above` is true when the packet came in
/// over the virtual node's parent link.
///
/// Packets from below climb to the RT root. At the root a target inside the
/// deleted node's span turns the packet downward; otherwise it leaves toward
/// the deleted node's parent. Going down, a target at most the host's label
/// lies left (its leaf index is at most the node's index), else right.
pub fn rt_route_step(vn: &VirtualNode, w: &RoutingLabel, from_above: bool) -> Result<Link, RouteError> {
    let t = w.new_id;
    let (lo, hi) = vn.span;
    if t == hi {
        return Err(RouteError::TargetDeleted { target: t });
    }
    let inside = (lo..hi).contains(&t);
    let descending = from_above || (vn.is_root && inside);
    if !descending || !inside {
        return vn.parent_link.ok_or(RouteError::Dangling(Place::Virtual(vn.host)));
    }
    Ok(if t <= vn.host_new_id { vn.left_link } else { vn.right_link })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub from: Place,
    /// Port used at `from`; `None` for a move inside one host.
    pub port: Option<PortId>,
    pub to: Place,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub target: RoutingLabel,
    /// Leaf index reached inside a reconstruction tree, if one was crossed.
    pub rt_target_index: Option<u64>,
    pub hop_count: u64,
    pub trace: Vec<Hop>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteOutcome {
    pub delivered: bool,
    pub packet: Packet,
    pub error: Option<RouteError>,
}

impl RouteOutcome {
    /// Hops that crossed a real link.
    pub fn link_hops(&self) -> u64 {
        self.packet.trace.iter().filter(|h| h.port.is_some()).count() as u64
    }
}

fn arrival(net: &Network<NodeVars, Msg>, node: NodeId, port: PortId) -> (Place, bool) {
    let vn = net
        .vars(node)
        .and_then(|v| v.heal.as_ref())
        .and_then(|h| h.virtual_node.as_ref());
    if let Some(vn) = vn {
        if vn.parent_link.is_some_and(|l| l.port == Some(port)) {
            return (Place::Virtual(node), true);
        }
        if [vn.left_link, vn.right_link].iter().any(|l| l.port == Some(port)) {
            return (Place::Virtual(node), false);
        }
    }
    (Place::Real(node), false)
}

/// Walks a packet from `source` to the node labelled `target` hop by hop.
pub fn simulate_route(
    net: &Network<NodeVars, Msg>,
    source: NodeId,
    target: &RoutingLabel,
    max_hops: u64,
) -> RouteOutcome {
    let mut packet = Packet {
        target: target.clone(),
        rt_target_index: None,
        hop_count: 0,
        trace: Vec::new(),
    };
    let mut at = Place::Real(source);
    let mut from_above = false;
    let fail = |packet: Packet, e: RouteError| RouteOutcome {
        delivered: false,
        packet,
        error: Some(e),
    };
    loop {
        let host = at.host();
        let Some(v) = net.vars(host) else {
            return fail(packet, RouteError::UnknownNode(host));
        };
        let (port, next, above) = match at {
            Place::Real(_) => match route_step(v, target) {
                Ok(Step::Deliver) => {
                    return RouteOutcome {
                        delivered: true,
                        packet,
                        error: None,
                    }
                }
                Ok(Step::ToVirtual) => (None, Place::Virtual(host), false),
                Ok(Step::Forward(p)) => match net.link(host, p) {
                    Some(l) => {
                        let (place, above) = arrival(net, l.node, l.port);
                        (Some(p), place, above)
                    }
                    None => return fail(packet, RouteError::Dangling(at)),
                },
                Err(e) => return fail(packet, e),
            },
            Place::Virtual(_) => {
                let Some(vn) = v.heal.as_ref().and_then(|h| h.virtual_node.as_ref()) else {
                    return fail(packet, RouteError::Dangling(at));
                };
                let link = match rt_route_step(vn, target, from_above) {
                    Ok(l) => l,
                    Err(e) => return fail(packet, e),
                };
                let going_down = Some(link) != vn.parent_link;
                if let Place::Real(n) = link.to {
                    if going_down {
                        packet.rt_target_index = net
                            .vars(n)
                            .and_then(|v| v.heal.as_ref())
                            .map(|h| h.rt_index);
                    }
                }
                if let Some(p) = link.port {
                    if net.link(host, p).map(|l| l.node) != Some(link.to.host()) {
                        return fail(packet, RouteError::Dangling(at));
                    }
                }
                (link.port, link.to, going_down && matches!(link.to, Place::Virtual(_)))
            }
        };
        packet.trace.push(Hop { from: at, port, to: next });
        packet.hop_count += 1;
        at = next;
        from_above = above;
        if packet.hop_count > max_hops {
            return fail(packet, RouteError::HopLimit(max_hops));
        }
    }
}

/// Label of a node currently in the network.
pub fn label_of(net: &Network<NodeVars, Msg>, id: NodeId) -> Option<RoutingLabel> {
    net.vars(id).map(RoutingLabel::of)
}
