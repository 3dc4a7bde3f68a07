use serde::{Deserialize, Serialize};

use crate::kernel::{Network, ReadOrderPolicy, SimError, StageReport};

use super::{
    bfs_tree, build_heavy_intervals, convergecast_weights, dfs_rename, distribute_wills_adversarial,
    distribute_wills_one_round, leader_election, light_paths_big, light_paths_small, LabelVariant, Msg,
    NodeVars, WeightMode, WillStats, WillVariant,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub b: u64,
    pub weight_mode: WeightMode,
    pub labels: LabelVariant,
    pub wills: WillVariant,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            b: 2,
            weight_mode: WeightMode::Broadcast,
            labels: LabelVariant::Big,
            wills: WillVariant::OneRound,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub stages: Vec<StageReport>,
    pub will: WillStats,
}

impl PipelineReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn total_rounds(&self) -> u64 {
        self.stages.iter().map(|s| s.executed_rounds).sum()
    }

    pub fn total_messages(&self) -> u64 {
        self.stages.iter().map(|s| s.messages).sum()
    }
}

/// Leader election, BFS tree, weights, DFS labels, heavy intervals, light
/// paths and wills, in that order. `d_known` bounds the diameter.
pub fn run_preprocessing_pipeline(
    net: &mut Network<NodeVars, Msg>,
    policy: &ReadOrderPolicy<Msg>,
    cfg: &PipelineConfig,
    d_known: u64,
) -> Result<PipelineReport, SimError> {
    if cfg.wills == WillVariant::OneRound && policy.is_adversarial() {
        return Err(SimError::Config(
            "one-round will distribution needs node-chosen reads".into(),
        ));
    }
    // Generous caps; every stage is expected to finish far below them.
    let cap = 8 * (net.len() as u64 + net.edge_count() as u64) + 64;
    let mut stages = vec![
        leader_election(net, policy, d_known)?,
        bfs_tree(net, policy, cap)?,
        convergecast_weights(net, policy, cfg.b, cfg.weight_mode, cap)?,
        dfs_rename(net, policy, cap)?,
        build_heavy_intervals(net, policy)?,
    ];
    stages.push(match cfg.labels {
        LabelVariant::Big => light_paths_big(net, policy, cap)?,
        LabelVariant::Small => light_paths_small(net, policy, cap)?,
    });
    let (will_report, will) = match cfg.wills {
        WillVariant::OneRound => distribute_wills_one_round(net, policy)?,
        WillVariant::Adversarial => distribute_wills_adversarial(net, policy, cap)?,
    };
    stages.push(will_report);
    Ok(PipelineReport { stages, will })
}
