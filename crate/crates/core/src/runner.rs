//! Named schedulers over a shared simulation config.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{self, BaselineError, NonergodicOracle, RepetitionRr};
use crate::c3p::{self, C3pError, C3pParams, C3pScheduler, EstimatorMode, StopRule};
use crate::engine::{self, EngineError, RunOutput, SimConfig};
use crate::workload::Tapes;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Collector(#[from] C3pError),
    #[error("unknown scheduler `{0}`")]
    UnknownScheduler(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    C3p,
    Static,
    Nonergodic,
    Uncoded,
    Rr,
    HcmmLike,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 6] =
        [Self::C3p, Self::Static, Self::Nonergodic, Self::Uncoded, Self::Rr, Self::HcmmLike];

    pub fn label(self) -> &'static str {
        match self {
            Self::C3p => "c3p",
            Self::Static => "static",
            Self::Nonergodic => "nonergodic",
            Self::Uncoded => "uncoded",
            Self::Rr => "rr",
            Self::HcmmLike => "hcmm_like",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SchedulerKind {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        Self::ALL.into_iter().find(|k| k.label() == s).ok_or_else(|| RunError::UnknownScheduler(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopMode {
    /// Stop coded runs at `R + ⌈k·R⌉` results.
    #[default]
    Idealized,
    /// Stop coded runs when the decoder completes.
    Realistic,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub sim: SimConfig,
    pub alpha: f64,
    pub estimator: EstimatorMode,
    pub stop: StopMode,
    pub k_fraction: f64,
}

impl RunSpec {
    pub fn new(sim: SimConfig) -> Self {
        Self {
            sim,
            alpha: c3p::DEFAULT_ALPHA,
            estimator: EstimatorMode::default(),
            stop: StopMode::default(),
            k_fraction: c3p::DEFAULT_K_FRACTION,
        }
    }

    /// `⌈k·R⌉`.
    pub fn k(&self) -> usize {
        c3p::overhead_count(self.sim.rows, self.k_fraction)
    }

    pub fn coded_stop(&self) -> StopRule {
        match self.stop {
            StopMode::Idealized => StopRule::Count(self.sim.rows + self.k()),
            StopMode::Realistic => StopRule::Decode,
        }
    }

    pub fn c3p_params(&self) -> C3pParams {
        C3pParams { alpha: self.alpha, mode: self.estimator, stop: self.coded_stop(), sizes: self.sim.sizes }
    }

    pub fn tapes(&self) -> Tapes {
        Tapes::new(&self.sim.helpers, self.sim.seed)
    }
}

/// Run one scheduler. Runs of different kinds under the same spec see the
/// same runtime and link tapes.
pub fn run_kind(kind: SchedulerKind, spec: &RunSpec) -> Result<RunOutput, RunError> {
    let n = spec.sim.helpers.len();
    let rows = spec.sim.rows;
    let mut tapes = spec.tapes();
    let out = match kind {
        SchedulerKind::C3p => {
            let mut s = C3pScheduler::new(n, spec.c3p_params())?;
            engine::run_with_tapes(&spec.sim, tapes, &mut s)?
        }
        SchedulerKind::Static => {
            let means = baselines::oracle_means(&mut tapes);
            let mut s = baselines::static_scheduler(&means, rows, None)?;
            engine::run_with_tapes(&spec.sim, tapes, &mut s)?
        }
        SchedulerKind::HcmmLike => {
            let means = baselines::oracle_means(&mut tapes);
            let mut s = baselines::hcmm_like_scheduler(&means, rows + spec.k())?;
            engine::run_with_tapes(&spec.sim, tapes, &mut s)?
        }
        SchedulerKind::Uncoded => {
            let means = baselines::profile_means(&tapes);
            let mut s = baselines::uncoded_scheduler(&means, rows)?;
            engine::run_with_tapes(&spec.sim, tapes, &mut s)?
        }
        SchedulerKind::Nonergodic => {
            let mut s = NonergodicOracle::new(tapes.clone(), spec.sim.sizes, spec.coded_stop());
            engine::run_with_tapes(&spec.sim, tapes, &mut s)?
        }
        SchedulerKind::Rr => {
            let mut s = RepetitionRr::new(n, rows, spec.alpha, spec.estimator, spec.sim.sizes)?;
            engine::run_with_tapes(&spec.sim, tapes, &mut s)?
        }
    };
    Ok(out)
}
