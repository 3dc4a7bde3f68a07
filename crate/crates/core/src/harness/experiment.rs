use crate::kernel::{word_bits_for, GraphError, KernelConfig, Network, SimError};
use crate::protocols::{run_preprocessing_pipeline, Msg, NodeVars, PipelineReport};

use super::oracle::audit_preprocessing;
use super::report::{StageMetrics, REPORT_SCHEMA_VERSION};
use super::{BoundSchedule, ConfigError, EdgeList, ExperimentConfig, GraphIoError, GraphSource, GraphStats, MetricsReport};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no graph given")]
    NoGraph,
    #[error(transparent)]
    GraphIo(#[from] GraphIoError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub struct Experiment {
    pub report: MetricsReport,
    pub pipeline: PipelineReport,
    pub network: Network<NodeVars, Msg>,
}

pub fn load_source(src: &GraphSource) -> Result<EdgeList, GraphIoError> {
    match src {
        GraphSource::File(p) => EdgeList::load(p),
        GraphSource::Generator(g) => g.generate(),
    }
}

/// Builds the network `cfg` describes with its kernel limits applied.
pub fn build_network(cfg: &ExperimentConfig, g: &EdgeList) -> Result<Network<NodeVars, Msg>, ExperimentError> {
    cfg.validate()?;
    let mut kc = KernelConfig::for_size(g.n());
    kc.strict = cfg.strict;
    kc.memory_budget_words = cfg.budget_words(word_bits_for(g.n()));
    Ok(Network::build(&g.nodes, &g.edges, cfg.assignment(), Some(kc))?)
}

/// Runs the full pipeline on `g`. The diameter handed to leader election
/// comes from a centralized BFS.
pub fn run_on(cfg: &ExperimentConfig, g: &EdgeList, schedule: &BoundSchedule) -> Result<Experiment, ExperimentError> {
    let mut net = build_network(cfg, g)?;
    let stats = GraphStats::of(g);
    let pipeline = run_preprocessing_pipeline(&mut net, &cfg.policy.build(), &cfg.pipeline(), stats.diameter)?;
    let report = MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        graph: stats,
        word_bits: net.word_bits(),
        memory_budget_words: net.config().memory_budget_words,
        stages: pipeline.stages.iter().map(StageMetrics::from).collect(),
        will: pipeline.will.clone(),
        total_rounds: pipeline.total_rounds(),
        total_messages: pipeline.total_messages(),
        verdicts: schedule.check(&pipeline, &stats),
        audit: audit_preprocessing(&net, cfg.b),
    };
    Ok(Experiment {
        report,
        pipeline,
        network: net,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig, schedule: &BoundSchedule) -> Result<Experiment, ExperimentError> {
    let g = load_source(cfg.graph.as_ref().ok_or(ExperimentError::NoGraph)?)?;
    run_on(cfg, &g, schedule)
}
