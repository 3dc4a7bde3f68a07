use serde::{Deserialize, Serialize};

use crate::kernel::{
    big_message_budget, run_stage, Network, ReadOrderPolicy, ReadSupport, SimError, StageReport,
};

use super::{Msg, NodeVars};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelVariant {
    /// Whole light paths travel in one message.
    #[default]
    Big,
    /// Light nodes announce one port each; paths are assembled entry by entry.
    Small,
}

fn reset(net: &mut Network<NodeVars, Msg>) {
    for n in net.nodes.iter_mut() {
        let v = &mut n.vars;
        v.light_path.clear();
        v.light_level = 0;
        v.has_path = false;
        v.scratch = Default::default();
        v.done = false;
    }
}

/// Light paths with `O(log^2 n)`-bit messages: each node hands its path,
/// extended by its own port if light, down every non-parent port.
pub fn light_paths_big(
    net: &mut Network<NodeVars, Msg>,
    policy: &ReadOrderPolicy<Msg>,
    max_rounds: u64,
) -> Result<StageReport, SimError> {
    reset(net);
    let saved = net.config().message_budget_bits;
    net.set_message_budget_bits(big_message_budget(net.word_bits()));
    let report = run_stage(
        net,
        policy,
        ReadSupport::Stream,
        "light_paths_big",
        max_rounds,
        |ctx| {
            let mut got = false;
            while let Some((port, m)) = ctx.next_delivery() {
                if let Msg::Rl { path, port: x } = m {
                    let v = ctx.vars_mut();
                    if v.parent_port == Some(port) && !v.has_path {
                        v.light_path = path;
                        if !v.is_heavy {
                            v.light_path.push(x);
                        }
                        got = true;
                    }
                }
            }
            let v = ctx.vars_mut();
            if v.is_root() && !v.has_path {
                got = true;
            }
            if got {
                v.has_path = true;
                v.light_level = v.light_path.len() as u64;
                v.done = true;
                let (path, pp) = (v.light_path.clone(), v.parent_port);
                ctx.charge(path.len() as u64);
                let mut cur = ctx.next_live_port(None);
                while let Some(p) = cur {
                    if Some(p) != pp {
                        ctx.send(p, Msg::Rl { path: path.clone(), port: p });
                    }
                    cur = ctx.next_live_port(Some(p));
                }
                ctx.release(path.len() as u64);
            }
        },
        |net| net.nodes().iter().all(|n| n.vars().done),
    );
    net.set_message_budget_bits(saved);
    report
}

/// Light paths with `O(log n)`-bit messages. Round 1 tells every child its
/// parent-side port; light nodes then announce that port down their
/// subtree and everyone forwards announcements arriving from the parent.
/// Nearer ancestors' announcements arrive first, so entries are prepended.
/// The root's `ROOT_DONE`, forwarded by all, ends the stage.
pub fn light_paths_small(
    net: &mut Network<NodeVars, Msg>,
    policy: &ReadOrderPolicy<Msg>,
    max_rounds: u64,
) -> Result<StageReport, SimError> {
    reset(net);
    let base = net.round();
    run_stage(
        net,
        policy,
        ReadSupport::Stream,
        "light_paths_small",
        max_rounds,
        |ctx| {
            let r = ctx.round() - base;
            let pp = ctx.vars().parent_port;
            if r == 1 {
                let mut cur = ctx.next_live_port(None);
                while let Some(p) = cur {
                    if Some(p) != pp {
                        ctx.send(p, Msg::PortNo(p));
                    }
                    cur = ctx.next_live_port(Some(p));
                }
                if ctx.vars().is_root() && ctx.degree() == 0 {
                    let v = ctx.vars_mut();
                    v.has_path = true;
                    v.done = true;
                }
                return;
            }
            let mut forward: Option<Msg> = None;
            while let Some((port, m)) = ctx.next_delivery() {
                if Some(port) != pp {
                    continue;
                }
                let v = ctx.vars_mut();
                match m {
                    Msg::PortNo(x) => {
                        if !v.is_heavy {
                            v.light_path.push(x);
                            // Own entry goes down with the first announcements.
                            forward = Some(Msg::PortAnnounce(x));
                        }
                    }
                    Msg::PortAnnounce(x) => {
                        v.light_path.insert(0, x);
                        forward = Some(Msg::PortAnnounce(x));
                    }
                    Msg::RootDone => {
                        v.has_path = true;
                        v.done = true;
                        forward = Some(Msg::RootDone);
                    }
                    _ => {}
                }
            }
            if r == 2 && ctx.vars().is_root() {
                let v = ctx.vars_mut();
                v.has_path = true;
                v.done = true;
                forward = Some(Msg::RootDone);
            }
            let v = ctx.vars_mut();
            v.light_level = v.light_path.len() as u64;
            if let Some(m) = forward {
                ctx.broadcast_except_if(m, |p| Some(p) == pp);
            }
        },
        |net| net.nodes().iter().all(|n| n.vars().done) && net.is_quiet(),
    )
}
