//! Asymptotic bound schedule with explicit constants.
//!
//! Each item groups pipeline stages and names the shape of its bound. A
//! measurement passes when `measured <= c * shape + slack`. Leader election
//! is flooding, so it is checked on its own and left out of the other items.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::protocols::{LabelVariant, PipelineReport, WillVariant};

use super::GraphStats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub rounds: f64,
    pub messages: f64,
}

/// Constants per item. The defaults are loose enough for every generator in
/// the test corpus and tight enough to catch a wrong asymptotic shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundSchedule {
    pub slack: f64,
    /// rounds ~ D + 1, messages ~ m * D
    pub leader: Constants,
    /// BFS tree plus will stage, node-chosen reads: rounds ~ D, messages ~ m
    pub compact_ft: Constants,
    /// BFS tree plus will stage, adversarial reads: rounds ~ D + Delta, messages ~ m + n * Delta
    pub compact_ft_adversarial: Constants,
    /// BFS, weights, DFS, intervals and big labels: rounds ~ m, messages ~ m
    pub tz_big: Constants,
    /// The same with small labels: rounds ~ m, messages ~ m * D
    pub tz_small: Constants,
    /// Everything after leader election: rounds ~ m (+ Delta), messages as
    /// the labels variant (+ n * Delta with adversarial wills)
    pub compact_ftz: Constants,
}

impl Default for BoundSchedule {
    fn default() -> Self {
        BoundSchedule {
            slack: 16.0,
            leader: Constants {
                rounds: 1.0,
                messages: 2.0,
            },
            compact_ft: Constants {
                rounds: 2.0,
                messages: 8.0,
            },
            compact_ft_adversarial: Constants {
                rounds: 2.0,
                messages: 4.0,
            },
            tz_big: Constants {
                rounds: 8.0,
                messages: 16.0,
            },
            tz_small: Constants {
                rounds: 8.0,
                messages: 16.0,
            },
            compact_ftz: Constants {
                rounds: 8.0,
                messages: 16.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub item: String,
    pub rounds_shape: String,
    pub messages_shape: String,
    pub measured_rounds: u64,
    pub allowed_rounds: f64,
    pub measured_messages: u64,
    pub allowed_messages: f64,
    pub pass: bool,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: rounds {} <= {:.0} [{}], messages {} <= {:.0} [{}]",
            if self.pass { "PASS" } else { "FAIL" },
            self.item,
            self.measured_rounds,
            self.allowed_rounds,
            self.rounds_shape,
            self.measured_messages,
            self.allowed_messages,
            self.messages_shape
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

fn sum(report: &PipelineReport, names: &[&str]) -> (u64, u64) {
    report
        .stages
        .iter()
        .filter(|s| names.contains(&s.name.as_str()))
        .fold((0, 0), |(r, m), s| (r + s.executed_rounds, m + s.messages))
}

impl BoundSchedule {
    pub fn load(path: &Path) -> Result<Self, ScheduleError> {
        Ok(toml::from_str(&std::fs::read_to_string(path)?)?)
    }

    #[allow(clippy::too_many_arguments)]
    fn verdict(
        &self,
        item: &str,
        c: Constants,
        measured: (u64, u64),
        rounds_shape: &str,
        rounds_value: f64,
        messages_shape: &str,
        messages_value: f64,
    ) -> Verdict {
        let allowed_rounds = c.rounds * rounds_value + self.slack;
        let allowed_messages = c.messages * messages_value + self.slack;
        Verdict {
            item: item.into(),
            rounds_shape: rounds_shape.into(),
            messages_shape: messages_shape.into(),
            measured_rounds: measured.0,
            allowed_rounds,
            measured_messages: measured.1,
            allowed_messages,
            pass: measured.0 as f64 <= allowed_rounds && measured.1 as f64 <= allowed_messages,
        }
    }

    /// Verdicts for every item the run exercised.
    pub fn check(&self, report: &PipelineReport, g: &GraphStats) -> Vec<Verdict> {
        let (n, m, d, dm) = (g.n as f64, g.m as f64, g.diameter as f64, g.max_degree as f64);
        let labels = if report.stage("light_paths_small").is_some() {
            LabelVariant::Small
        } else {
            LabelVariant::Big
        };
        let wills = if report.stage("wills_adversarial").is_some() {
            WillVariant::Adversarial
        } else {
            WillVariant::OneRound
        };
        let light = match labels {
            LabelVariant::Big => "light_paths_big",
            LabelVariant::Small => "light_paths_small",
        };
        let will = match wills {
            WillVariant::OneRound => "wills_one_round",
            WillVariant::Adversarial => "wills_adversarial",
        };
        let tz = ["bfs_tree", "convergecast", "dfs_rename", "heavy_intervals", light];
        let mut out = vec![self.verdict(
            "leader",
            self.leader,
            sum(report, &["leader_election"]),
            "D+1",
            d + 1.0,
            "m*D",
            m * d.max(1.0),
        )];
        out.push(match wills {
            WillVariant::OneRound => self.verdict(
                "compact_ft",
                self.compact_ft,
                sum(report, &["bfs_tree", will]),
                "D+1",
                d + 1.0,
                "m",
                m,
            ),
            WillVariant::Adversarial => self.verdict(
                "compact_ft_adversarial",
                self.compact_ft_adversarial,
                sum(report, &["bfs_tree", will]),
                "D+Delta",
                d + dm,
                "m+n*Delta",
                m + n * dm,
            ),
        });
        out.push(match labels {
            LabelVariant::Big => self.verdict("tz_big", self.tz_big, sum(report, &tz), "m", m, "m", m),
            LabelVariant::Small => {
                self.verdict("tz_small", self.tz_small, sum(report, &tz), "m", m, "m*(D+1)", m * (d + 1.0))
            }
        });
        let mut all = tz.to_vec();
        all.push(will);
        let (rs, rv) = match wills {
            WillVariant::OneRound => ("m", m),
            WillVariant::Adversarial => ("m+Delta", m + dm),
        };
        let (ms, mv) = match (labels, wills) {
            (LabelVariant::Big, WillVariant::OneRound) => ("m", m),
            (LabelVariant::Big, WillVariant::Adversarial) => ("m+n*Delta", m + n * dm),
            (LabelVariant::Small, WillVariant::OneRound) => ("m*(D+1)", m * (d + 1.0)),
            (LabelVariant::Small, WillVariant::Adversarial) => ("m*(D+1)+n*Delta", m * (d + 1.0) + n * dm),
        };
        out.push(self.verdict("compact_ftz", self.compact_ftz, sum(report, &all), rs, rv, ms, mv));
        out
    }
}
