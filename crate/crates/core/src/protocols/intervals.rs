use crate::kernel::{run_stage, Network, ReadOrderPolicy, ReadSupport, SimError, StageReport};

use super::{Msg, NodeVars};

/// Each heavy child reports `[d, NewId]` to its parent, which stores it
/// next to the child's entry in `heavy_ports`.
pub fn build_heavy_intervals(
    net: &mut Network<NodeVars, Msg>,
    policy: &ReadOrderPolicy<Msg>,
) -> Result<StageReport, SimError> {
    let base = net.round();
    for n in net.nodes.iter_mut() {
        let v = &mut n.vars;
        v.heavy_intervals = vec![(0, 0); v.heavy_ports.len()];
    }
    run_stage(
        net,
        policy,
        ReadSupport::Stream,
        "heavy_intervals",
        3,
        |ctx| {
            if ctx.round() - base == 1 {
                let v = ctx.vars();
                if let (true, Some(pp)) = (v.is_heavy, v.parent_port) {
                    let (lo, hi) = (v.d_v, v.new_id);
                    ctx.send(pp, Msg::Interval { lo, hi });
                }
            }
            while let Some((port, m)) = ctx.next_delivery() {
                if let Msg::Interval { lo, hi } = m {
                    let v = ctx.vars_mut();
                    match v.heavy_slot(port) {
                        Some(i) => v.heavy_intervals[i] = (lo, hi),
                        None => ctx.raise("interval from a port that is not a heavy child"),
                    }
                }
            }
        },
        |net| net.round() - base >= 2,
    )
}
