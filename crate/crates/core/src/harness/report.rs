use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kernel::{GraphError, KernelConfig, Network, NodeId, PortLink, StageReport};
use crate::protocols::{Msg, NodeVars, WillStats};

use super::{ExperimentConfig, GraphStats, Verdict};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unsupported schema version {found}, expected {expected}")]
    Schema { found: u32, expected: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageMetrics {
    pub name: String,
    /// Last round in which the stage sent a message.
    pub rounds: u64,
    pub executed_rounds: u64,
    pub messages: u64,
    pub max_message_bits: u64,
    pub peak_memory_words: u64,
    pub faults: u64,
    pub undelivered: u64,
}

impl From<&StageReport> for StageMetrics {
    fn from(s: &StageReport) -> Self {
        StageMetrics {
            name: s.name.clone(),
            rounds: s.rounds,
            executed_rounds: s.executed_rounds,
            messages: s.messages,
            max_message_bits: s.max_message_bits,
            peak_memory_words: s.peak_memory_words,
            faults: s.faults,
            undelivered: s.undelivered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub graph: GraphStats,
    pub word_bits: u32,
    pub memory_budget_words: u64,
    pub stages: Vec<StageMetrics>,
    pub will: WillStats,
    pub total_rounds: u64,
    pub total_messages: u64,
    pub verdicts: Vec<Verdict>,
    /// Oracle discrepancies; empty on a correct run.
    pub audit: Vec<String>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    n: u64,
    m: u64,
    diameter: u64,
    max_degree: u64,
    b: u64,
    policy: String,
    labels: &'a str,
    wills: &'a str,
    stage: &'a str,
    rounds: u64,
    executed_rounds: u64,
    messages: u64,
    max_message_bits: u64,
    peak_memory_words: u64,
}

impl MetricsReport {
    pub fn passed(&self) -> bool {
        self.audit.is_empty() && self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ReportError> {
        let r: Self = serde_json::from_str(s)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(ReportError::Schema {
                found: r.schema_version,
                expected: REPORT_SCHEMA_VERSION,
            });
        }
        Ok(r)
    }

    /// One CSV row per stage. The header is written only when asked for, so
    /// sweeps can append several reports to one file.
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<(), ReportError> {
        let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(out);
        let labels = variant_name(&self.config.labels);
        let wills = variant_name(&self.config.wills);
        for s in &self.stages {
            w.serialize(CsvRow {
                n: self.graph.n,
                m: self.graph.m,
                diameter: self.graph.diameter,
                max_degree: self.graph.max_degree,
                b: self.config.b,
                policy: self.config.policy.to_string(),
                labels: &labels,
                wills: &wills,
                stage: &s.name,
                rounds: s.rounds,
                executed_rounds: s.executed_rounds,
                messages: s.messages,
                max_message_bits: s.max_message_bits,
                peak_memory_words: s.peak_memory_words,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

fn variant_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_owned))
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNode {
    pub id: NodeId,
    pub links: Vec<Option<PortLink>>,
    pub vars: NodeVars,
}

/// Everything a labeled (and possibly healed) network needs to route again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema_version: u32,
    pub word_bits: u32,
    pub config: KernelConfig,
    pub removed: u32,
    pub b: u64,
    pub nodes: Vec<SnapshotNode>,
}

impl Snapshot {
    pub fn of(net: &Network<NodeVars, Msg>, b: u64) -> Self {
        Snapshot {
            schema_version: SNAPSHOT_SCHEMA_VERSION,
            word_bits: net.word_bits(),
            config: net.config().clone(),
            removed: net.removed_count(),
            b,
            nodes: net
                .nodes()
                .iter()
                .map(|n| SnapshotNode {
                    id: n.id(),
                    links: n.links().to_vec(),
                    vars: n.vars().clone(),
                })
                .collect(),
        }
    }

    pub fn network(&self) -> Result<Network<NodeVars, Msg>, ReportError> {
        let parts = self.nodes.iter().map(|n| (n.id, n.links.clone(), n.vars.clone())).collect();
        Ok(Network::from_parts(parts, self.word_bits, self.config.clone(), self.removed)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReportError> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let s: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if s.schema_version != SNAPSHOT_SCHEMA_VERSION {
            return Err(ReportError::Schema {
                found: s.schema_version,
                expected: SNAPSHOT_SCHEMA_VERSION,
            });
        }
        Ok(s)
    }
}
