//! The preprocessing protocols as per-node round handlers.

mod bfs;
mod convergecast;
mod dfs;
mod intervals;
mod leader;
mod light;
mod pipeline;
mod vars;
mod will;

pub use bfs::bfs_tree;
pub use convergecast::{convergecast_weights, WeightMode};
pub use dfs::dfs_rename;
pub use intervals::build_heavy_intervals;
pub use leader::leader_election;
pub use light::{light_paths_big, light_paths_small, LabelVariant};
pub use pipeline::{run_preprocessing_pipeline, PipelineConfig, PipelineReport};
pub use vars::{DfsCursor, Msg, NodeVars, Scratch, SubWill, Token, WillRef};
pub use will::{distribute_wills_adversarial, distribute_wills_one_round, WillStats, WillVariant};
