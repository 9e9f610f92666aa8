//! Comparison schedulers: static coded allocation, the runtime oracle,
//! uncoded proportional split, repetition with round robin and a
//! block-coded static split (`hcmm_like`).

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::c3p::{C3pError, Cadence, EstimatorMode, StopRule};
use crate::engine::{AckInfo, Ctx, Payload, ResultInfo, Scheduler};
use crate::workload::{PacketSizes, Tapes};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("invalid allocation input: {0}")]
    Config(String),
    #[error(transparent)]
    Cadence(#[from] C3pError),
}

type Result<T> = std::result::Result<T, BaselineError>;

/// Integer split of `total` proportional to `weights` by largest remainder.
/// Ties in the fractional part go to the lower index.
pub fn largest_remainder(weights: &[f64], total: usize) -> Result<Vec<usize>> {
    if weights.is_empty() {
        return Err(BaselineError::Config("no helpers".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(BaselineError::Config("weights must be finite and non-negative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(BaselineError::Config("weights sum to zero".into()));
    }
    let real: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<usize> = real.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (real[b] - real[b].floor()).total_cmp(&(real[a] - real[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    Ok(out)
}

fn inverse(means: &[f64]) -> Result<Vec<f64>> {
    if means.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(BaselineError::Config(format!("mean runtimes must be positive: {means:?}")));
    }
    Ok(means.iter().map(|m| 1.0 / m).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticAllocation {
    pub r: Vec<usize>,
    /// `R / Σ 1/E[β_n]`.
    pub t_static: f64,
}

/// Rows per helper inversely proportional to its mean runtime.
pub fn static_allocate(mean_betas: &[f64], r: usize) -> Result<StaticAllocation> {
    let w = inverse(mean_betas)?;
    let rate: f64 = w.iter().sum();
    Ok(StaticAllocation { r: largest_remainder(&w, r)?, t_static: r as f64 / rate })
}

/// Block sizes `⌈(R+K) / (E[β_n]·Σ 1/E[β_k])⌉` for the block-coded split.
pub fn block_sizes(mean_betas: &[f64], total: usize) -> Result<Vec<usize>> {
    let w = inverse(mean_betas)?;
    let rate: f64 = w.iter().sum();
    Ok(w.iter().map(|wi| (total as f64 * wi / rate - 1e-9).ceil() as usize).collect())
}

/// Per-helper mean runtimes as an oracle sees them (see [`Tapes::packet_mean`]).
pub fn oracle_means(tapes: &mut Tapes) -> Vec<f64> {
    (0..tapes.len()).map(|n| tapes.packet_mean(n)).collect()
}

/// Profile means `a_n + 1/μ_n`.
pub fn profile_means(tapes: &Tapes) -> Vec<f64> {
    (0..tapes.len()).map(|n| tapes.profile(n).mean_runtime()).collect()
}

/// Sends a fixed number of packets to each helper at t=0 and stops at a
/// result count or once every uncoded row is known.
#[derive(Debug, Clone)]
pub struct UpfrontScheduler {
    name: &'static str,
    queues: Vec<Vec<Payload>>,
    stop_at: Option<usize>,
}

impl UpfrontScheduler {
    /// Coded packets, `alloc[n]` to helper `n`, stop after `stop_at` results.
    pub fn coded(name: &'static str, alloc: &[usize], stop_at: usize) -> Self {
        let queues = alloc.iter().map(|&k| vec![Payload::Coded; k]).collect();
        Self { name, queues, stop_at: Some(stop_at) }
    }

    /// Disjoint consecutive row blocks, wait for all.
    pub fn uncoded(alloc: &[usize]) -> Self {
        let mut next = 0;
        let queues = alloc
            .iter()
            .map(|&k| {
                // popped from the back, so stored in reverse
                let v: Vec<Payload> = (next..next + k).rev().map(Payload::Source).collect();
                next += k;
                v
            })
            .collect();
        Self { name: "uncoded", queues, stop_at: None }
    }
}

impl Scheduler for UpfrontScheduler {
    fn name(&self) -> &str {
        self.name
    }

    fn on_start(&mut self, ctx: &mut Ctx) {
        for (n, q) in self.queues.iter().enumerate() {
            for _ in 0..q.len() {
                ctx.send(n, 0.0);
            }
        }
    }

    fn on_send_slot(&mut self, _ctx: &mut Ctx, helper: usize) -> Option<Payload> {
        self.queues[helper].pop()
    }

    fn on_result(&mut self, ctx: &mut Ctx, _res: &ResultInfo) {
        let done = match self.stop_at {
            Some(k) => ctx.results_received() >= k,
            None => ctx.distinct_sources() >= ctx.rows(),
        };
        if done {
            ctx.stop();
        }
    }
}

/// Static coded allocation from mean runtimes; stops at `Σ r_n` results
/// unless `stop_at` overrides it.
pub fn static_scheduler(mean_betas: &[f64], r: usize, stop_at: Option<usize>) -> Result<UpfrontScheduler> {
    let alloc = static_allocate(mean_betas, r)?;
    let total = alloc.r.iter().sum();
    Ok(UpfrontScheduler::coded("static", &alloc.r, stop_at.unwrap_or(total)))
}

/// Uncoded proportional split of `R` rows, waiting for every row.
pub fn uncoded_scheduler(mean_betas: &[f64], r: usize) -> Result<UpfrontScheduler> {
    Ok(UpfrontScheduler::uncoded(&static_allocate(mean_betas, r)?.r))
}

/// Block-coded static split of `R+K` packets, stopping at `R+K` results.
pub fn hcmm_like_scheduler(mean_betas: &[f64], total: usize) -> Result<UpfrontScheduler> {
    Ok(UpfrontScheduler::coded("hcmm_like", &block_sizes(mean_betas, total)?, total))
}

/// Knows every runtime and link delay in advance and sends each packet so
/// it reaches the helper exactly when the previous computation ends.
#[derive(Debug, Clone)]
pub struct NonergodicOracle {
    tapes: Tapes,
    sizes: PacketSizes,
    stop: StopRule,
    sent: Vec<usize>,
    last_arrival: Vec<f64>,
    last_end: Vec<f64>,
}

impl NonergodicOracle {
    /// `tapes` must be a clone of the tapes driving the simulation.
    pub fn new(tapes: Tapes, sizes: PacketSizes, stop: StopRule) -> Self {
        let n = tapes.len();
        Self { tapes, sizes, stop, sent: vec![0; n], last_arrival: vec![0.0; n], last_end: vec![0.0; n] }
    }
}

impl Scheduler for NonergodicOracle {
    fn name(&self) -> &str {
        "nonergodic"
    }

    fn on_start(&mut self, ctx: &mut Ctx) {
        for n in 0..self.tapes.len() {
            ctx.send(n, 0.0);
        }
    }

    fn on_send_slot(&mut self, ctx: &mut Ctx, n: usize) -> Option<Payload> {
        let now = ctx.now();
        let k = self.sent[n];
        let d = self.tapes.link(n, k).data_delay(&self.sizes);
        let arrival = (now + d).max(self.last_arrival[n]);
        let end = arrival.max(self.last_end[n]) + self.tapes.runtime(n, k);
        self.last_arrival[n] = arrival;
        self.last_end[n] = end;
        self.sent[n] += 1;
        let d_next = self.tapes.link(n, k + 1).data_delay(&self.sizes);
        let next = (end - d_next).max(now);
        if next.is_finite() {
            ctx.send(n, next);
        }
        Some(Payload::Coded)
    }

    fn on_result(&mut self, ctx: &mut Ctx, _res: &ResultInfo) {
        if self.stop.reached(ctx) {
            ctx.stop();
        }
    }
}

/// Uncoded rows dealt round robin with the adaptive per-helper cadence;
/// rows still unanswered after a full pass are dealt again.
#[derive(Debug, Clone)]
pub struct RepetitionRr {
    cadence: Cadence,
    live: BTreeSet<usize>,
    rows: usize,
    cursor: usize,
    first_pass: bool,
    outstanding: Vec<HashSet<usize>>,
}

impl RepetitionRr {
    pub fn new(n: usize, rows: usize, alpha: f64, mode: EstimatorMode, sizes: PacketSizes) -> Result<Self> {
        Ok(Self {
            cadence: Cadence::new(n, alpha, mode, sizes)?,
            live: (0..rows).collect(),
            rows,
            cursor: 0,
            first_pass: true,
            outstanding: vec![HashSet::new(); n],
        })
    }

    fn pick(&mut self, helper: usize) -> Option<usize> {
        if self.first_pass {
            // rows answered early in the pass are skipped
            while self.cursor < self.rows && !self.live.contains(&self.cursor) {
                self.cursor += 1;
            }
            if self.cursor < self.rows {
                let i = self.cursor;
                self.cursor += 1;
                return Some(i);
            }
            self.first_pass = false;
            self.cursor = 0;
        }
        let busy = &self.outstanding[helper];
        let i = self
            .live
            .range(self.cursor..)
            .chain(self.live.range(..self.cursor))
            .copied()
            .find(|i| !busy.contains(i))?;
        self.cursor = i + 1;
        Some(i)
    }

    pub fn live(&self) -> usize {
        self.live.len()
    }
}

impl Scheduler for RepetitionRr {
    fn name(&self) -> &str {
        "rr"
    }

    fn on_start(&mut self, ctx: &mut Ctx) {
        self.cadence.start(ctx);
    }

    fn on_send_slot(&mut self, ctx: &mut Ctx, helper: usize) -> Option<Payload> {
        let i = self.pick(helper)?;
        self.outstanding[helper].insert(i);
        self.cadence.sent(ctx, helper);
        Some(Payload::Source(i))
    }

    fn on_transmission_ack(&mut self, ctx: &mut Ctx, ack: &AckInfo) {
        self.cadence.ack(ctx, ack);
    }

    fn on_result(&mut self, ctx: &mut Ctx, res: &ResultInfo) {
        if let crate::engine::PacketKind::Source(i) = res.kind {
            self.outstanding[res.helper].remove(&i);
            self.live.remove(&i);
        }
        self.cadence.result(ctx, res);
        if self.live.is_empty() {
            ctx.stop();
        }
    }

    fn on_timeout(&mut self, ctx: &mut Ctx, helper: usize) {
        self.cadence.timeout(ctx, helper);
    }
}
