//! Graph loading and generation, oracles, experiment driver, bound checks,
//! metrics and snapshots.

mod bounds;
mod config;
mod experiment;
mod graph;
pub mod oracle;
mod report;

pub use bounds::{BoundSchedule, Constants, ScheduleError, Verdict};
pub use config::{ConfigError, ExperimentConfig, GraphSource, PolicySpec};
pub use experiment::{build_network, load_source, run_experiment, run_on, Experiment, ExperimentError};
pub use graph::{bfs_distances, EdgeList, Generator, GraphIoError, GraphStats};
pub use report::{
    MetricsReport, ReportError, Snapshot, SnapshotNode, StageMetrics, REPORT_SCHEMA_VERSION, SNAPSHOT_SCHEMA_VERSION,
};
