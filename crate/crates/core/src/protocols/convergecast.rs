use serde::{Deserialize, Serialize};

use crate::kernel::{run_stage, NodeCtx, Network, ReadOrderPolicy, ReadSupport, SimError, StageReport};

use super::{Msg, NodeVars};

/// How a child learns whether it is heavy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// The parent broadcasts its weight once it is known.
    #[default]
    Broadcast,
    /// The child re-sends a query every round until the parent answers.
    Poll,
}

/// Leaf-count weights and heavy/light classification over the BFS tree.
/// A child `v` of `p` is heavy iff `b * wt(v) >= wt(p)`; the root counts as heavy.
pub fn convergecast_weights(
    net: &mut Network<NodeVars, Msg>,
    policy: &ReadOrderPolicy<Msg>,
    b: u64,
    mode: WeightMode,
    max_rounds: u64,
) -> Result<StageReport, SimError> {
    if b < 2 {
        return Err(SimError::Config(format!("heavy threshold b must be at least 2, got {b}")));
    }
    for n in net.nodes.iter_mut() {
        let v = &mut n.vars;
        v.wt = 0;
        v.is_heavy = false;
        v.heavy_children.clear();
        v.heavy_ports.clear();
        v.heavy_intervals.clear();
        v.scratch = Default::default();
        v.done = false;
    }
    run_stage(
        net,
        policy,
        ReadSupport::Stream,
        "convergecast",
        max_rounds,
        |ctx| step(ctx, b, mode),
        |net| {
            net.nodes().iter().all(|n| n.vars().done) && net.is_quiet()
        },
    )
}

fn insert_heavy(v: &mut NodeVars, id: crate::kernel::NodeId, port: crate::kernel::PortId) {
    if v.heavy_slot(port).is_some() {
        return;
    }
    let at = v.heavy_ports.partition_point(|&p| p < port);
    v.heavy_ports.insert(at, port);
    v.heavy_children.insert(at, id);
}

fn step(ctx: &mut NodeCtx<'_, NodeVars, Msg>, b: u64, mode: WeightMode) {
    let me = ctx.id();
    let mut reply_up: Option<bool> = None;
    let mut sent_up = false;
    while let Some((port, m)) = ctx.next_delivery() {
        let from_parent = ctx.vars().parent_port == Some(port);
        match m {
            Msg::Weight(w) => {
                let s = &mut ctx.vars_mut().scratch;
                s.counter_a += 1;
                s.value += w;
            }
            Msg::ParentWeight(pw) if from_parent => {
                let v = ctx.vars_mut();
                if !v.scratch.flag_b {
                    let heavy = b * v.wt >= pw;
                    v.is_heavy = heavy;
                    v.scratch.flag_b = true;
                    reply_up = Some(heavy);
                }
            }
            Msg::WeightReply { heavy, id } if mode == WeightMode::Broadcast => {
                let v = ctx.vars_mut();
                v.scratch.counter_b += 1;
                if heavy {
                    insert_heavy(v, id, port);
                }
            }
            Msg::WeightReply { heavy, .. } if from_parent => {
                let v = ctx.vars_mut();
                v.is_heavy = heavy;
                v.scratch.flag_b = true;
            }
            Msg::WeightQuery { weight, id } => {
                let v = ctx.vars_mut();
                if v.scratch.flag_a {
                    let heavy = b * weight >= v.wt;
                    if heavy {
                        insert_heavy(v, id, port);
                    }
                    ctx.send(port, Msg::WeightReply { heavy, id: me });
                }
            }
            _ => {}
        }
    }

    let parent_port = ctx.vars().parent_port;
    let v = ctx.vars_mut();
    if !v.scratch.flag_a && v.scratch.counter_a == v.n_child {
        v.wt = if v.n_child == 0 { 1 } else { v.scratch.value };
        v.scratch.flag_a = true;
        let wt = v.wt;
        match parent_port {
            Some(pp) => {
                ctx.send(pp, Msg::Weight(wt));
                sent_up = true;
            }
            None => {
                v.is_heavy = true;
                v.scratch.flag_b = true;
            }
        }
        if mode == WeightMode::Broadcast && ctx.vars().n_child > 0 {
            match parent_port {
                Some(pp) => ctx.broadcast_except(Msg::ParentWeight(wt), &[pp]),
                None => ctx.broadcast(Msg::ParentWeight(wt)),
            }
        }
    }
    if let (Some(heavy), Some(pp)) = (reply_up, parent_port) {
        ctx.send(pp, Msg::WeightReply { heavy, id: me });
    }
    let v = ctx.vars();
    if mode == WeightMode::Poll && v.scratch.flag_a && !v.scratch.flag_b && !sent_up {
        if let Some(pp) = parent_port {
            let weight = v.wt;
            ctx.send(pp, Msg::WeightQuery { weight, id: me });
        }
    }
    let v = ctx.vars_mut();
    v.done = v.scratch.flag_a
        && v.scratch.flag_b
        && (mode == WeightMode::Poll || v.scratch.counter_b == v.n_child);
}
