//! Adaptive collector: per-helper transmission interval, runtime estimation
//! and timeout backoff.
//!
//! Each helper gets one coded packet at t=0. The second packet waits for the
//! first result; from then on packets go out every TTI, where
//! `TTI = min(Tr − Tx, E[β])` after each result and doubles on timeout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{AckInfo, Ctx, Payload, ResultInfo, Scheduler};
use crate::workload::PacketSizes;

pub const DEFAULT_ALPHA: f64 = 0.125;
pub const DEFAULT_K_FRACTION: f64 = 0.05;
const MIN_ESTIMATE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum C3pError {
    #[error("result time {tr} precedes transmission time {tx}")]
    TraceCorruption { tr: f64, tx: f64 },
    #[error("runtime update before any result")]
    NoResults,
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Helpers report each runtime; the estimate is their running mean.
    Timestamped,
    /// Runtime inferred from ACK round trips and result arrival times.
    #[default]
    Inferred,
}

/// When the collector stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once this many results arrived.
    Count(usize),
    /// Stop once the peeling decoder recovered every row.
    Decode,
}

impl StopRule {
    /// `R + ⌈0.05·R⌉` results.
    pub fn idealized(r: usize) -> Self {
        Self::Count(r + overhead_count(r, DEFAULT_K_FRACTION))
    }

    pub fn reached(&self, ctx: &Ctx) -> bool {
        match *self {
            Self::Count(target) => ctx.results_received() >= target,
            Self::Decode => ctx.decode_complete(),
        }
    }
}

/// `⌈fraction·R⌉`.
pub fn overhead_count(r: usize, fraction: f64) -> usize {
    (fraction * r as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Mean of reported runtimes.
pub fn estimate_beta_timestamped(betas: &[f64]) -> Option<f64> {
    if betas.is_empty() {
        None
    } else {
        Some(betas.iter().sum::<f64>() / betas.len() as f64)
    }
}

/// Data round trip implied by a receipt-ACK round trip.
pub fn rtt_data_from_ack(rtt_ack: f64, sizes: &PacketSizes) -> f64 {
    (sizes.data_bits + sizes.result_bits) / (sizes.data_bits + sizes.ack_bits) * rtt_ack
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C3pParams {
    pub alpha: f64,
    pub mode: EstimatorMode,
    pub stop: StopRule,
    pub sizes: PacketSizes,
}

impl C3pParams {
    pub fn new(r: usize, sizes: PacketSizes) -> Self {
        Self { alpha: DEFAULT_ALPHA, mode: EstimatorMode::default(), stop: StopRule::idealized(r), sizes }
    }
}

/// Collector-side protocol state for one helper.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectorHelperState {
    /// `TTI_n`; infinite until the first result.
    pub tti: f64,
    /// `TO_n`; infinite until the first result.
    pub timeout: f64,
    pub est_mean_beta: Option<f64>,
    /// Results received.
    pub m: usize,
    pub rtt_data_ewma: Option<f64>,
    pub tu_hat: f64,
    pub beta_sum: f64,
    pub last_tx: f64,
    pub last_tr: Option<f64>,
    pub next_send: f64,
    pub sent: usize,
    pub alpha: f64,
    pub mode: EstimatorMode,
}

impl CollectorHelperState {
    pub fn new(alpha: f64, mode: EstimatorMode) -> Result<Self, C3pError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(C3pError::Alpha(alpha));
        }
        Ok(Self {
            tti: f64::INFINITY,
            timeout: f64::INFINITY,
            est_mean_beta: None,
            m: 0,
            rtt_data_ewma: None,
            tu_hat: 0.0,
            beta_sum: 0.0,
            last_tx: 0.0,
            last_tr: None,
            next_send: f64::INFINITY,
            sent: 0,
            alpha,
            mode,
        })
    }

    fn rtt(&self) -> f64 {
        self.rtt_data_ewma.unwrap_or(0.0)
    }

    /// `TTI = min(Tr − Tx, E[β])`, `TO = 2·TTI`.
    pub fn tti_update(&mut self, tr: f64, tx: f64) -> Result<f64, C3pError> {
        if tr < tx {
            return Err(C3pError::TraceCorruption { tr, tx });
        }
        let est = self.est_mean_beta.ok_or(C3pError::NoResults)?;
        self.tti = (tr - tx).min(est).max(MIN_ESTIMATE);
        self.timeout = 2.0 * self.tti;
        Ok(self.tti)
    }

    /// Timeout expiry: double the interval.
    pub fn on_timeout(&mut self) -> f64 {
        self.tti *= 2.0;
        self.timeout = 2.0 * self.tti;
        self.tti
    }

    /// Fold one receipt-ACK round trip into the smoothed data RTT.
    pub fn infer_rtt_data(&mut self, rtt_ack: f64, sizes: &PacketSizes) -> f64 {
        let sample = rtt_data_from_ack(rtt_ack, sizes);
        let v = match self.rtt_data_ewma {
            None => sample,
            Some(prev) => self.alpha * sample + (1.0 - self.alpha) * prev,
        };
        self.rtt_data_ewma = Some(v);
        v
    }

    /// Inferred runtime after the `m`-th result (already counted in `m`).
    ///
    /// `tx` is the transmission time of the packet whose result arrived at
    /// `tr`; the previous result time is taken from the state.
    pub fn infer_update_on_result(&mut self, tr: f64, tx: f64, sizes: &PacketSizes) -> Result<f64, C3pError> {
        if self.m == 0 {
            return Err(C3pError::NoResults);
        }
        let rtt = self.rtt();
        if self.m == 1 {
            self.tu_hat = 0.0;
            // priming: first turnaround minus the round trip
            let est = (tr - tx - rtt).max(MIN_ESTIMATE);
            self.est_mean_beta = Some(est);
            return Ok(est);
        }
        let prev_tr = self.last_tr.ok_or(C3pError::NoResults)?;
        let xtt = prev_tr - tx;
        self.tu_hat += (rtt - xtt).max(0.0);
        let tc = tr - sizes.result_bits / (sizes.data_bits + sizes.result_bits) * rtt;
        let est = ((tc - self.tu_hat) / self.m as f64).max(MIN_ESTIMATE);
        self.est_mean_beta = Some(est);
        Ok(est)
    }

    /// Running mean of reported runtimes after the `m`-th result.
    pub fn timestamped_update(&mut self, beta: f64) -> Result<f64, C3pError> {
        if self.m == 0 {
            return Err(C3pError::NoResults);
        }
        self.beta_sum += beta;
        let est = (self.beta_sum / self.m as f64).max(MIN_ESTIMATE);
        self.est_mean_beta = Some(est);
        Ok(est)
    }

    /// Record a transmission at `now`; returns the next send time if the
    /// cadence is established.
    pub fn on_send(&mut self, now: f64) -> Option<f64> {
        self.last_tx = now;
        self.sent += 1;
        if self.tti.is_finite() {
            self.next_send = now + self.tti;
            Some(self.next_send)
        } else {
            self.next_send = f64::INFINITY;
            None
        }
    }

    /// Full result handling: estimator, TTI and the re-anchored next send
    /// time, which is returned.
    pub fn on_result(&mut self, now: f64, res: &ResultInfo, sizes: &PacketSizes) -> Result<f64, C3pError> {
        self.m += 1;
        match self.mode {
            EstimatorMode::Timestamped => self.timestamped_update(res.beta)?,
            EstimatorMode::Inferred => self.infer_update_on_result(now, res.tx, sizes)?,
        };
        self.last_tr = Some(now);
        self.tti_update(now, res.tx)?;
        self.next_send = now.max(self.last_tx + self.tti);
        Ok(self.next_send)
    }

    /// Timeout handling; returns `(next send, next timeout)`.
    pub fn timeout_fired(&mut self, now: f64) -> (f64, f64) {
        self.on_timeout();
        self.next_send = now.max(self.last_tx + self.tti);
        (self.next_send, now + self.timeout)
    }
}

/// Per-helper cadence shared by the coded collector and the repetition
/// round-robin baseline.
#[derive(Debug, Clone)]
pub struct Cadence {
    pub states: Vec<CollectorHelperState>,
    pub sizes: PacketSizes,
}

impl Cadence {
    pub fn new(n: usize, alpha: f64, mode: EstimatorMode, sizes: PacketSizes) -> Result<Self, C3pError> {
        let s = CollectorHelperState::new(alpha, mode)?;
        Ok(Self { states: vec![s; n], sizes })
    }

    pub fn start(&mut self, ctx: &mut Ctx) {
        for n in 0..self.states.len() {
            ctx.send(n, 0.0);
        }
    }

    pub fn sent(&mut self, ctx: &mut Ctx, helper: usize) {
        if let Some(t) = self.states[helper].on_send(ctx.now()) {
            ctx.send(helper, t);
        }
    }

    pub fn ack(&mut self, ctx: &mut Ctx, ack: &AckInfo) {
        let st = &mut self.states[ack.helper];
        if st.mode == EstimatorMode::Inferred {
            st.infer_rtt_data(ctx.now() - ack.tx, &self.sizes);
        }
    }

    pub fn result(&mut self, ctx: &mut Ctx, res: &ResultInfo) {
        let n = res.helper;
        let now = ctx.now();
        let next =
            self.states[n].on_result(now, res, &self.sizes).expect("engine delivers results after their transmission");
        ctx.cancel_sends(n);
        ctx.send(n, next);
        ctx.arm_timeout(n, now + self.states[n].timeout);
    }

    pub fn timeout(&mut self, ctx: &mut Ctx, helper: usize) {
        let (next, to) = self.states[helper].timeout_fired(ctx.now());
        ctx.cancel_sends(helper);
        ctx.send(helper, next);
        ctx.arm_timeout(helper, to);
    }
}

/// The adaptive coded collector.
#[derive(Debug, Clone)]
pub struct C3pScheduler {
    pub cadence: Cadence,
    pub stop: StopRule,
}

impl C3pScheduler {
    pub fn new(n: usize, params: C3pParams) -> Result<Self, C3pError> {
        Ok(Self { cadence: Cadence::new(n, params.alpha, params.mode, params.sizes)?, stop: params.stop })
    }

    pub fn states(&self) -> &[CollectorHelperState] {
        &self.cadence.states
    }
}

impl Scheduler for C3pScheduler {
    fn name(&self) -> &str {
        "c3p"
    }

    fn on_start(&mut self, ctx: &mut Ctx) {
        self.cadence.start(ctx);
    }

    fn on_send_slot(&mut self, ctx: &mut Ctx, helper: usize) -> Option<Payload> {
        self.cadence.sent(ctx, helper);
        Some(Payload::Coded)
    }

    fn on_transmission_ack(&mut self, ctx: &mut Ctx, ack: &AckInfo) {
        self.cadence.ack(ctx, ack);
    }

    fn on_result(&mut self, ctx: &mut Ctx, res: &ResultInfo) {
        self.cadence.result(ctx, res);
        if self.stop.reached(ctx) {
            ctx.stop();
        }
    }

    fn on_timeout(&mut self, ctx: &mut Ctx, helper: usize) {
        self.cadence.timeout(ctx, helper);
    }
}
