//! Small hand-checkable runs on explicit runtime tapes.

use c3p_core::baselines::{self, RepetitionRr, UpfrontScheduler};
use c3p_core::engine::{self, EngineError, RunOutput};
use c3p_core::workload::{ChannelModel, HelperProfile, HelperSpec, PacketSizes, RuntimeScenario, RuntimeSource};
use c3p_core::{C3pParams, C3pScheduler, EstimatorMode, SimConfig, StopRule};

use crate::CliError;

/// Zero-delay config where helper `n` computes its packets in `tapes[n]` order.
pub fn explicit_config(tapes: &[Vec<f64>], rows: usize) -> SimConfig {
    let helpers = tapes
        .iter()
        .enumerate()
        .map(|(n, t)| HelperSpec {
            profile: HelperProfile::new(n, 0.0, 1.0, RuntimeScenario::PerPacketIid, ChannelModel::Instant)
                .expect("unit rate is valid"),
            runtimes: RuntimeSource::Explicit(t.clone()),
            stall_after: None,
        })
        .collect();
    let mut c = SimConfig::new(helpers, rows, PacketSizes::new(8.0, 8.0, 1.0).expect("positive sizes"), 0);
    c.record_events = true;
    c
}

/// Three helpers taking 1, 2 and 10 seconds per row, six rows.
pub fn per_row_speeds() -> SimConfig {
    explicit_config(&[vec![1.0; 8], vec![2.0; 8], vec![10.0; 8]], 6)
}

/// Three helpers with irregular runtimes, six rows.
pub fn irregular_tape() -> SimConfig {
    explicit_config(&[vec![1.0, 1.0, 0.5, 1.0, 1.5], vec![1.5, 3.5], vec![3.0, 2.5]], 6)
}

/// Completion times of the three upfront splits of [`per_row_speeds`]:
/// equal uncoded blocks, equal coded shares, and shares proportional to speed.
pub fn upfront_splits() -> Result<[f64; 3], CliError> {
    let cfg = per_row_speeds();
    let naive = engine::run(&cfg, &mut UpfrontScheduler::uncoded(&[2, 2, 2]))?;
    let equal = engine::run(&cfg, &mut UpfrontScheduler::coded("static", &[3, 3, 3], 6))?;
    let mut aware = baselines::static_scheduler(&[1.0, 2.0, 10.0], 6, None)?;
    let aware = engine::run(&cfg, &mut aware)?;
    Ok([naive.metrics.t_total, equal.metrics.t_total, aware.metrics.t_total])
}

pub fn c3p_on_irregular(mode: EstimatorMode) -> Result<RunOutput, EngineError> {
    let cfg = irregular_tape();
    let params = C3pParams { alpha: c3p_core::c3p::DEFAULT_ALPHA, mode, stop: StopRule::Count(6), sizes: cfg.sizes };
    let mut s = C3pScheduler::new(3, params).expect("valid alpha");
    engine::run(&cfg, &mut s)
}

pub fn rr_on_irregular(mode: EstimatorMode) -> Result<RunOutput, CliError> {
    let cfg = irregular_tape();
    let mut s = RepetitionRr::new(3, 6, c3p_core::c3p::DEFAULT_ALPHA, mode, cfg.sizes)?;
    Ok(engine::run(&cfg, &mut s)?)
}
