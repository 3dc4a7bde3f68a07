use crate::kernel::{run_stage, Network, ReadOrderPolicy, ReadSupport, SimError, StageReport};

use super::{Msg, NodeVars};

/// Flooding max-ID election with a known diameter bound. Runs `d_known + 1`
/// rounds; each node keeps only the largest ID seen so far.
pub fn leader_election(
    net: &mut Network<NodeVars, Msg>,
    policy: &ReadOrderPolicy<Msg>,
    d_known: u64,
) -> Result<StageReport, SimError> {
    let base = net.round();
    let total = d_known + 1;
    run_stage(
        net,
        policy,
        ReadSupport::Stream,
        "leader_election",
        total,
        |ctx| {
            let r = ctx.round() - base;
            let me = ctx.id();
            if r == 1 {
                let v = ctx.vars_mut();
                v.leader_id = me;
                v.is_leader = true;
                if d_known > 0 {
                    ctx.broadcast(Msg::Leader(me));
                }
                return;
            }
            let mut changed = false;
            while let Some((_, m)) = ctx.next_delivery() {
                if let Msg::Leader(id) = m {
                    if id > ctx.vars().leader_id {
                        ctx.vars_mut().leader_id = id;
                        changed = true;
                    }
                }
            }
            let v = ctx.vars_mut();
            v.is_leader = v.leader_id == me;
            if changed && r <= d_known {
                let id = v.leader_id;
                ctx.broadcast(Msg::Leader(id));
            }
        },
        |net| net.round() - base >= total,
    )
}
