use crate::kernel::{run_stage, Network, ReadOrderPolicy, ReadSupport, SimError, StageReport};

use super::{Msg, NodeVars};

/// BFS spanning tree from the elected leader. The first JOIN read becomes
/// the parent; every other JOIN or YES is counted toward termination.
pub fn bfs_tree(
    net: &mut Network<NodeVars, Msg>,
    policy: &ReadOrderPolicy<Msg>,
    max_rounds: u64,
) -> Result<StageReport, SimError> {
    let base = net.round();
    for n in net.nodes.iter_mut() {
        let v = &mut n.vars;
        v.parent = None;
        v.parent_port = None;
        v.joined = false;
        v.n_child = 0;
        v.count = 0;
        v.done = false;
    }
    run_stage(
        net,
        policy,
        ReadSupport::Stream,
        "bfs_tree",
        max_rounds,
        |ctx| {
            let r = ctx.round() - base;
            if ctx.vars().done {
                // Drain stray traffic so buffers stay clean.
                while ctx.next_delivery().is_some() {}
                return;
            }
            let me = ctx.id();
            let mut newly_joined = false;
            if r == 1 && ctx.vars().is_leader {
                let v = ctx.vars_mut();
                v.joined = true;
                v.join_round = r;
                newly_joined = true;
            }
            while let Some((port, m)) = ctx.next_delivery() {
                let v = ctx.vars_mut();
                match m {
                    Msg::Join(sender) if !v.joined => {
                        v.joined = true;
                        v.join_round = r;
                        v.parent = Some(sender);
                        v.parent_port = Some(port);
                        newly_joined = true;
                    }
                    Msg::Join(_) => v.count += 1,
                    Msg::Yes => v.n_child += 1,
                    _ => {}
                }
            }
            if newly_joined {
                let parent_port = ctx.vars().parent_port;
                if let Some(pp) = parent_port {
                    ctx.send(pp, Msg::Yes);
                    ctx.broadcast_except(Msg::Join(me), &[pp]);
                } else {
                    ctx.broadcast(Msg::Join(me));
                }
            }
            let deg = ctx.degree() as u64;
            let v = ctx.vars_mut();
            if v.joined && v.count + v.n_child + v.parent.is_some() as u64 == deg {
                v.done = true;
            }
        },
        |net| net.nodes().iter().all(|n| n.vars().done),
    )
}
