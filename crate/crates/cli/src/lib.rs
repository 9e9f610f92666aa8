//! Experiment runner, verifier and trace dumper on top of `c3p-core`.

pub mod config;
pub mod experiment;
pub mod replay;
pub mod verify;

use c3p_core::runner::RunError;
use c3p_core::theory::TheoryError;
use c3p_core::{run_kind, SchedulerKind};
use thiserror::Error;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, ExperimentOutput};
pub use verify::{verify, Report, VerifyOptions};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "C3P_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

impl From<c3p_core::engine::EngineError> for CliError {
    fn from(e: c3p_core::engine::EngineError) -> Self {
        CliError::Run(e.into())
    }
}

impl From<c3p_core::baselines::BaselineError> for CliError {
    fn from(e: c3p_core::baselines::BaselineError) -> Self {
        CliError::Run(e.into())
    }
}

impl CliError {
    /// Process exit status: 2 for bad input, 1 for anything that failed while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Run(RunError::UnknownScheduler(_)) => 2,
            _ => 1,
        }
    }
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// Event log (`time,helper,event,packet`) of one run at the config's first
/// sweep point.
pub fn trace_csv(cfg: &ExperimentConfig, seed: u64, kind: SchedulerKind) -> Result<String, CliError> {
    let point = cfg.points()[0];
    let mut spec = experiment::replicate_spec(cfg, point, seed)?;
    spec.sim.record_events = true;
    let out = run_kind(kind, &spec)?;
    Ok(out.trace.events_csv())
}
