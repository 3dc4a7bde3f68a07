use crate::kernel::{run_stage, NodeCtx, Network, PortId, ReadOrderPolicy, ReadSupport, SimError, StageReport};

use super::{DfsCursor, Msg, NodeVars, Token};

/// Heavy-first post-order token walk. Assigns `NewId`, `d_v`, `c_v`, the
/// first-child port and each child's port to its next sibling.
pub fn dfs_rename(
    net: &mut Network<NodeVars, Msg>,
    policy: &ReadOrderPolicy<Msg>,
    max_rounds: u64,
) -> Result<StageReport, SimError> {
    let base = net.round();
    for n in net.nodes.iter_mut() {
        let v = &mut n.vars;
        v.new_id = 0;
        v.d_v = 0;
        v.c_v = 0;
        v.fst_port = None;
        v.nxt_port = None;
        v.delta = 0;
        v.sibling_index = None;
        v.scratch = Default::default();
        v.done = false;
    }
    run_stage(
        net,
        policy,
        ReadSupport::Both,
        "dfs_rename",
        max_rounds,
        |ctx| {
            let r = ctx.round() - base;
            if r == 1 && ctx.vars().is_root() {
                enter(ctx, 1, None);
            }
            while let Some((port, m)) = ctx.next_delivery() {
                if let Msg::Token(t) = m {
                    on_token(ctx, port, t);
                }
            }
        },
        |net| net.nodes().iter().all(|n| !n.vars().is_root() || n.vars().done) && net.is_quiet(),
    )
}

fn enter(ctx: &mut NodeCtx<'_, NodeVars, Msg>, next: u64, index: Option<u64>) {
    let v = ctx.vars_mut();
    v.scratch.flag_a = true;
    v.d_v = next;
    v.scratch.value = next;
    v.sibling_index = index;
    v.scratch.cursor = DfsCursor::Heavy(0);
    advance(ctx);
}

fn on_token(ctx: &mut NodeCtx<'_, NodeVars, Msg>, port: PortId, t: Token) {
    let from_parent = ctx.vars().parent_port == Some(port);
    match t {
        Token::Down { next, index } if from_parent && !ctx.vars().scratch.flag_a => {
            enter(ctx, next, Some(index));
        }
        Token::Down { .. } => ctx.send(port, Msg::Token(Token::Bounce)),
        Token::Bounce => advance(ctx),
        Token::Up { next } => {
            let v = ctx.vars_mut();
            v.scratch.value = next;
            v.scratch.counter_a += 1;
            if v.scratch.counter_a == 1 {
                v.fst_port = Some(port);
            }
            match v.scratch.prev_port.replace(port) {
                Some(prev) => {
                    v.scratch.flag_c = true;
                    ctx.send(prev, Msg::Token(Token::SetNext(port)));
                }
                None => advance(ctx),
            }
        }
        Token::AckNext => {
            ctx.vars_mut().scratch.flag_c = false;
            advance(ctx);
        }
        Token::SetNext(p) if from_parent => {
            ctx.vars_mut().nxt_port = Some(p);
            ctx.send(port, Msg::Token(Token::AckNext));
        }
        Token::SetNext(_) => ctx.raise("sibling link from a non-parent port"),
    }
}

fn advance(ctx: &mut NodeCtx<'_, NodeVars, Msg>) {
    loop {
        let v = ctx.vars();
        let (next, index) = (v.scratch.value, v.scratch.counter_a);
        let down = Msg::Token(Token::Down { next, index });
        match v.scratch.cursor {
            DfsCursor::Heavy(i) if i < v.heavy_ports.len() => {
                let p = v.heavy_ports[i];
                ctx.vars_mut().scratch.cursor = DfsCursor::Heavy(i + 1);
                ctx.send(p, down);
                return;
            }
            DfsCursor::Heavy(_) => {
                let v = ctx.vars_mut();
                v.c_v = v.scratch.value;
                v.scratch.cursor = DfsCursor::Light(None);
            }
            DfsCursor::Light(after) => {
                let mut cur = ctx.next_live_port(after);
                while let Some(p) = cur {
                    let v = ctx.vars();
                    if v.parent_port != Some(p) && v.heavy_slot(p).is_none() {
                        break;
                    }
                    cur = ctx.next_live_port(Some(p));
                }
                match cur {
                    Some(p) => {
                        ctx.vars_mut().scratch.cursor = DfsCursor::Light(Some(p));
                        ctx.send(p, down);
                        return;
                    }
                    None => {
                        let v = ctx.vars_mut();
                        v.new_id = v.scratch.value;
                        v.delta = v.scratch.counter_a;
                        v.scratch.cursor = DfsCursor::Finished;
                        v.done = true;
                        let (pp, up) = (v.parent_port, v.new_id + 1);
                        if let Some(pp) = pp {
                            ctx.send(pp, Msg::Token(Token::Up { next: up }));
                        }
                        return;
                    }
                }
            }
            DfsCursor::Idle | DfsCursor::Finished => return,
        }
    }
}
