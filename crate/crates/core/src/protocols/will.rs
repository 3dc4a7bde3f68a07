use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::hft::{subwill_indices, users, IndexRef, NodeKind, SubWillIdx};
use crate::kernel::{
    run_stage, NodeCtx, NodeId, Network, PortId, ReadOrderPolicy, ReadSupport, SimError, StageReport,
};

use super::{Msg, NodeVars, SubWill, WillRef};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WillVariant {
    /// Pull reads along the sibling chain; every subwill leaves in one round.
    #[default]
    OneRound,
    /// Any read order; one subwill per round.
    Adversarial,
}

/// Observer-side measurements of a will stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WillStats {
    /// Rounds (within the stage) in which at least one SUBWILL was sent.
    pub compute_rounds: Vec<u64>,
    pub peak_slots: u64,
    pub peak_ids: u64,
}

const NODE_SLOT_WORDS: u64 = 3;
const WILL_SLOT_WORDS: u64 = 2;

fn reset(net: &mut Network<NodeVars, Msg>) {
    for n in net.nodes.iter_mut() {
        let v = &mut n.vars;
        v.will = None;
        v.will_peak_slots = 0;
        v.will_peak_ids = 0;
        v.scratch = Default::default();
        v.done = false;
    }
}

fn stats(net: &Network<NodeVars, Msg>, rounds: BTreeSet<u64>) -> WillStats {
    WillStats {
        compute_rounds: rounds.into_iter().collect(),
        peak_slots: net.nodes().iter().map(|n| n.vars().will_peak_slots).max().unwrap_or(0),
        peak_ids: net.nodes().iter().map(|n| n.vars().will_peak_ids).max().unwrap_or(0),
    }
}

fn resolve(
    idx: &SubWillIdx,
    delta: u64,
    span: (u64, u64),
    id_of: impl Fn(u64) -> Option<NodeId>,
) -> Option<SubWill> {
    let r = |kind: NodeKind, index: u64| id_of(index).map(|id| WillRef { kind, index, id });
    let rr = |x: Option<IndexRef>| match x {
        Some(x) => r(x.kind, x.index).map(Some),
        None => Some(None),
    };
    Some(SubWill {
        index: idx.child_index,
        delta,
        leaf_parent: match idx.leaf_parent_idx {
            Some(i) => Some(r(NodeKind::NonLeaf, i)?),
            None => None,
        },
        nonleaf_parent: match idx.nonleaf_parent_idx {
            Some(i) => Some(r(NodeKind::NonLeaf, i)?),
            None => None,
        },
        left: rr(idx.nonleaf_left_idx)?,
        right: rr(idx.nonleaf_right_idx)?,
        span,
    })
}

/// Will distribution with node-chosen reads.
///
/// Round 1 the parent signals its children; round 2 each child sends its
/// ID and the parent's port to its next sibling; round 3 the parent reads
/// the children along that chain and fills each subwill as the IDs it
/// names arrive, sending it once its last one is in.
pub fn distribute_wills_one_round(
    net: &mut Network<NodeVars, Msg>,
    policy: &ReadOrderPolicy<Msg>,
) -> Result<(StageReport, WillStats), SimError> {
    reset(net);
    let base = net.round();
    let mut sent_rounds = BTreeSet::new();
    let report = run_stage(
        net,
        policy,
        ReadSupport::Pull,
        "wills_one_round",
        4,
        |ctx| {
            let r = ctx.round() - base;
            let pp = ctx.vars().parent_port;
            match r {
                1 if ctx.vars().delta > 0 => ctx.broadcast_except_if(Msg::WillReq, |p| Some(p) == pp),
                2 => {
                    if let Some(pp) = pp {
                        match ctx.receive(pp) {
                            Some(Msg::WillReq) => {
                                let v = ctx.vars();
                                let info = Msg::ChildInfo {
                                    id: ctx.id(),
                                    nxt_port: v.nxt_port,
                                    index: v.sibling_index.unwrap_or(0),
                                };
                                ctx.send(pp, info);
                            }
                            other => ctx.raise(format!("expected WILL_REQ from parent, got {other:?}")),
                        }
                    }
                }
                3 if ctx.vars().delta > 0 => {
                    if compute_chain(ctx) {
                        sent_rounds.insert(r);
                    }
                }
                4 => {
                    if let Some(pp) = pp {
                        match ctx.receive(pp) {
                            Some(Msg::SubWill(s)) => ctx.vars_mut().will = Some(s),
                            other => ctx.raise(format!("expected SUBWILL from parent, got {other:?}")),
                        }
                    }
                }
                _ => {}
            }
        },
        |net| net.round() - base >= 4,
    )?;
    Ok((report, stats(net, sent_rounds)))
}

/// A subwill under construction: the child's port once read, and the IDs
/// it names that have arrived so far.
#[derive(Default)]
struct Partial {
    port: Option<PortId>,
    ids: Vec<(u64, NodeId)>,
}

/// The parent's single compute round. Returns whether anything was sent.
///
/// Each child ID is copied into every open subwill that names it as soon as
/// it is read, so it never waits in a slot of its own.
fn compute_chain(ctx: &mut NodeCtx<'_, NodeVars, Msg>) -> bool {
    let (delta, span, fst) = {
        let v = ctx.vars();
        (v.delta, (v.d_v, v.new_id), v.fst_port)
    };
    let mut will_slots: BTreeMap<u64, Partial> = BTreeMap::new();
    let (mut peak_slots, mut peak_ids) = (0u64, 0u64);
    let mut port = fst;
    let mut sent = false;
    for k in 0..delta {
        let Some(p) = port else {
            ctx.raise(format!("sibling chain ends after {k} of {delta} children"));
            return sent;
        };
        let (id, nxt) = match ctx.receive(p) {
            Some(Msg::ChildInfo { id, nxt_port, index }) if index == k => (id, nxt_port),
            other => {
                ctx.raise(format!("broken sibling chain at child {k}: {other:?}"));
                return sent;
            }
        };
        ctx.charge(NODE_SLOT_WORDS);
        let opened = will_slots.len();
        for s in users(k, delta).unwrap_or_default() {
            let w = will_slots.entry(s).or_default();
            w.ids.push((k, id));
            ctx.charge(NODE_SLOT_WORDS);
        }
        will_slots.entry(k).or_default().port = Some(p);
        ctx.charge(WILL_SLOT_WORDS * (will_slots.len() - opened) as u64);
        peak_slots = peak_slots.max(will_slots.len() as u64 + 1);
        peak_ids = peak_ids.max(1);
        ctx.release(NODE_SLOT_WORDS);

        let ready: Vec<u64> = will_slots
            .iter()
            .filter(|(&s, w)| w.port.is_some() && subwill_indices(s, delta).is_ok_and(|i| i.dependency_max <= k))
            .map(|(&s, _)| s)
            .collect();
        for s in ready {
            let idx = subwill_indices(s, delta).expect("index in range");
            let w = will_slots.remove(&s).expect("pending");
            let Some(sw) = resolve(&idx, delta, span, |j| w.ids.iter().find(|e| e.0 == j).map(|e| e.1)) else {
                ctx.raise(format!("subwill {s} is missing a child ID"));
                return sent;
            };
            ctx.release(WILL_SLOT_WORDS + NODE_SLOT_WORDS * w.ids.len() as u64);
            ctx.send(w.port.expect("ready"), Msg::SubWill(sw));
            sent = true;
        }
        port = nxt;
    }
    if !will_slots.is_empty() {
        ctx.raise(format!("{} subwills unsent after the chain", will_slots.len()));
    }
    let v = ctx.vars_mut();
    v.will_peak_slots = v.will_peak_slots.max(peak_slots);
    v.will_peak_ids = v.will_peak_ids.max(peak_ids);
    sent
}

/// Will distribution under any read order.
///
/// Children repeat their ID and index every round. In round `j + 2` the
/// parent streams all of them, keeps just the IDs subwill `j` names and the
/// port of child `j`, and sends subwill `j`. A child stops once it holds its
/// own subwill and no later subwill can still need its ID.
pub fn distribute_wills_adversarial(
    net: &mut Network<NodeVars, Msg>,
    policy: &ReadOrderPolicy<Msg>,
    max_rounds: u64,
) -> Result<(StageReport, WillStats), SimError> {
    reset(net);
    let base = net.round();
    let mut sent_rounds = BTreeSet::new();
    let report = run_stage(
        net,
        policy,
        ReadSupport::Stream,
        "wills_adversarial",
        max_rounds,
        |ctx| {
            let r = ctx.round() - base;
            let (delta, span, pp) = {
                let v = ctx.vars();
                (v.delta, (v.d_v, v.new_id), v.parent_port)
            };
            let job = (r >= 2 && r - 2 < delta).then(|| r - 2);
            let needed: Vec<u64> = job
                .and_then(|j| subwill_indices(j, delta).ok())
                .map(|i| i.referenced())
                .unwrap_or_default();
            let mut kept: Vec<(u64, NodeId)> = Vec::with_capacity(needed.len());
            let mut target: Option<PortId> = None;
            while let Some((port, m)) = ctx.next_delivery() {
                match m {
                    Msg::ChildInfo { id, index, .. } => {
                        if needed.contains(&index) && !kept.iter().any(|e| e.0 == index) {
                            kept.push((index, id));
                            ctx.charge(NODE_SLOT_WORDS);
                        }
                        if job == Some(index) && target.is_none() {
                            target = Some(port);
                            ctx.charge(1);
                        }
                    }
                    Msg::SubWill(s) if Some(port) == pp => {
                        let last_user = users(s.index, s.delta)
                            .ok()
                            .and_then(|u| u.into_iter().max())
                            .unwrap_or(0);
                        let v = ctx.vars_mut();
                        v.scratch.until_round = last_user + 1;
                        v.will = Some(s);
                    }
                    _ => {}
                }
            }
            if let Some(j) = job {
                let idx = subwill_indices(j, delta).expect("index in range");
                let held = kept.len() as u64 + target.is_some() as u64;
                let v = ctx.vars_mut();
                v.will_peak_slots = v.will_peak_slots.max(held);
                v.will_peak_ids = v.will_peak_ids.max(kept.len() as u64);
                let sw = resolve(&idx, delta, span, |i| kept.iter().find(|e| e.0 == i).map(|e| e.1));
                match (sw, target) {
                    (Some(sw), Some(port)) => {
                        ctx.send(port, Msg::SubWill(sw));
                        sent_rounds.insert(r);
                    }
                    _ => ctx.raise(format!("round {r}: IDs for subwill {j} did not all arrive")),
                }
                ctx.release(NODE_SLOT_WORDS * kept.len() as u64 + target.is_some() as u64);
            }
            if let Some(pp) = pp {
                let v = ctx.vars();
                if v.will.is_none() || r <= v.scratch.until_round {
                    let info = Msg::ChildInfo {
                        id: ctx.id(),
                        nxt_port: v.nxt_port,
                        index: v.sibling_index.unwrap_or(0),
                    };
                    ctx.send(pp, info);
                }
            }
        },
        |net| net.nodes().iter().all(|n| n.vars().is_root() || n.vars().will.is_some()) && net.is_quiet(),
    )?;
    Ok((report, stats(net, sent_rounds)))
}
