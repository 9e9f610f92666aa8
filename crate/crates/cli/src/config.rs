use std::fs;
use std::path::{Path, PathBuf};

use c3p_core::workload::{PacketSizes, Population, RuntimeScenario, ShiftRule};
use c3p_core::{EstimatorMode, SchedulerKind, StopMode};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A single value or a sweep list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Sweep<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Sweep::One(v) => vec![v.clone()],
            Sweep::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeRule {
    /// `B_x = 8R`, `B_r = 8`, `B_ack = 1` bits.
    #[default]
    PerRow,
    Fixed {
        data_bits: f64,
        result_bits: f64,
        ack_bits: f64,
    },
}

impl SizeRule {
    pub fn sizes(self, rows: usize) -> Result<PacketSizes, CliError> {
        let s = match self {
            SizeRule::PerRow => PacketSizes::for_rows(rows),
            SizeRule::Fixed { data_bits, result_bits, ack_bits } => {
                PacketSizes::new(data_bits, result_bits, ack_bits).map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        Ok(s)
    }
}

fn default_alpha() -> f64 {
    c3p_core::c3p::DEFAULT_ALPHA
}

fn default_k_fraction() -> f64 {
    c3p_core::c3p::DEFAULT_K_FRACTION
}

fn default_event_cap() -> u64 {
    c3p_core::engine::DEFAULT_EVENT_CAP
}

fn default_replicates() -> usize {
    1
}

/// One experiment. Every combination of `rows`, `helpers` and `scenario`
/// is a sweep point; each point runs `replicates` seeds through every
/// listed scheduler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub rows: Sweep<usize>,
    pub helpers: Sweep<usize>,
    pub scenario: Sweep<RuntimeScenario>,
    pub schedulers: Vec<SchedulerKind>,
    /// Set each helper's `μ` is drawn from.
    pub rate_set: Vec<f64>,
    pub shift: ShiftRule,
    /// Interval for each helper's mean channel rate in Mb/s; omit for an instant channel.
    #[serde(default)]
    pub channel_mbps: Option<(f64, f64)>,
    #[serde(default)]
    pub sizes: SizeRule,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub estimator: EstimatorMode,
    #[serde(default)]
    pub stop: StopMode,
    /// `K = ⌈k_fraction·R⌉`.
    #[serde(default = "default_k_fraction")]
    pub k_fraction: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Fill the `wall_ms` column. Off keeps output byte-reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default = "default_event_cap")]
    pub event_cap: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.rows.values().is_empty() || self.helpers.values().is_empty() || self.scenario.values().is_empty() {
            return bad("sweep lists must be non-empty");
        }
        if self.rows.values().contains(&0) || self.helpers.values().contains(&0) {
            return bad("rows and helpers must be positive");
        }
        if self.schedulers.is_empty() {
            return bad("no schedulers listed");
        }
        if self.rate_set.is_empty() || self.rate_set.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return bad("rate_set must hold positive rates");
        }
        if let ShiftRule::Fixed(a) = self.shift {
            if !(a.is_finite() && a >= 0.0) {
                return bad("shift must be non-negative");
            }
        }
        if let Some((lo, hi)) = self.channel_mbps {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return bad("channel_mbps must be an interval of positive rates");
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.k_fraction.is_finite() && self.k_fraction >= 0.0) {
            return bad("k_fraction must be non-negative");
        }
        for r in self.rows.values() {
            self.sizes.sizes(r)?;
        }
        Ok(())
    }

    pub fn population(&self, scenario: RuntimeScenario) -> Population {
        Population { rate_set: self.rate_set.clone(), shift: self.shift, channel_mbps: self.channel_mbps, scenario }
    }

    /// Sweep points in output order.
    pub fn points(&self) -> Vec<Point> {
        let mut v = Vec::new();
        for rows in self.rows.values() {
            for helpers in self.helpers.values() {
                for scenario in self.scenario.values() {
                    v.push(Point { rows, helpers, scenario });
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub rows: usize,
    pub helpers: usize,
    pub scenario: RuntimeScenario,
}
