use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{PortAssignment, ReadOrderPolicy};
use crate::protocols::{LabelVariant, Msg, PipelineConfig, WeightMode, WillVariant};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("b must be at least 2, got {0}")]
    SmallB(u64),
    #[error("unknown read policy '{0}' (expected node, rand:SEED or strong)")]
    Policy(String),
    #[error("memory budget multiplier must be positive, got {0}")]
    Budget(f64),
    #[error("one-round wills need node-chosen reads; use --wills adversarial")]
    WillsNeedPull,
}

/// Textual read policy: `node`, `rand:SEED` or `strong`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    Node,
    Rand(u64),
    /// Adaptive adversary that always delivers the highest port first.
    Strong,
}

impl PolicySpec {
    pub fn build(self) -> ReadOrderPolicy<Msg> {
        match self {
            PolicySpec::Node => ReadOrderPolicy::NodeChosen,
            PolicySpec::Rand(s) => ReadOrderPolicy::RandomAdversary(s),
            PolicySpec::Strong => ReadOrderPolicy::reverse_ports(),
        }
    }

    pub fn is_adversarial(self) -> bool {
        self != PolicySpec::Node
    }
}

impl FromStr for PolicySpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node" => Ok(PolicySpec::Node),
            "strong" => Ok(PolicySpec::Strong),
            _ => s
                .strip_prefix("rand:")
                .and_then(|seed| seed.parse().ok())
                .map(PolicySpec::Rand)
                .ok_or_else(|| ConfigError::Policy(s.into())),
        }
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = ConfigError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.to_string()
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Node => write!(f, "node"),
            PolicySpec::Rand(s) => write!(f, "rand:{s}"),
            PolicySpec::Strong => write!(f, "strong"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    File(PathBuf),
    Generator(super::Generator),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub graph: Option<GraphSource>,
    pub b: u64,
    pub policy: PolicySpec,
    pub labels: LabelVariant,
    pub wills: WillVariant,
    pub weight_mode: WeightMode,
    /// Scales the default budget of `64 log n` words per node.
    pub budget_mult: f64,
    /// Seed for port numbering; `None` numbers ports contiguously.
    pub port_seed: Option<u64>,
    pub strict: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: None,
            b: 2,
            policy: PolicySpec::Node,
            labels: LabelVariant::Big,
            wills: WillVariant::OneRound,
            weight_mode: WeightMode::Broadcast,
            budget_mult: 1.0,
            port_seed: None,
            strict: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.b < 2 {
            return Err(ConfigError::SmallB(self.b));
        }
        if !(self.budget_mult > 0.0 && self.budget_mult.is_finite()) {
            return Err(ConfigError::Budget(self.budget_mult));
        }
        if self.wills == WillVariant::OneRound && self.policy.is_adversarial() {
            return Err(ConfigError::WillsNeedPull);
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            b: self.b,
            weight_mode: self.weight_mode,
            labels: self.labels,
            wills: self.wills,
        }
    }

    pub fn assignment(&self) -> PortAssignment {
        self.port_seed.map_or(PortAssignment::Contiguous, PortAssignment::Gapped)
    }

    pub fn budget_words(&self, word_bits: u32) -> u64 {
        (self.budget_mult * 64.0 * word_bits as f64).ceil() as u64
    }
}
