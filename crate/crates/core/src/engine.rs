//! Deterministic discrete-event simulator for one collector and N helpers.
//!
//! Helpers are single FIFO servers. Each packet sent to a helper draws one
//! uplink and one downlink rate; the uplink carries the packet, the downlink
//! carries both the receipt ACK and the computed result. Data packets and
//! results stay in order per helper (a later message never overtakes an
//! earlier one); receipt ACKs are independent.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codec::{self, CodecError, LtEncoder, PeelingDecoder, SolitonParams, SourceTask};
use crate::workload::{HelperSpec, LinkDraw, PacketSizes, Tapes};

pub const DEFAULT_EVENT_CAP: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("scheduler contract violation at t={time}: {msg}")]
    Contract { time: f64, msg: String },
    #[error("event cap of {0} exceeded")]
    EventCap(u64),
    #[error("simulation ran out of events at t={time} before the scheduler stopped")]
    Stalled { time: f64 },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

type Result<T> = std::result::Result<T, EngineError>;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub helpers: Vec<HelperSpec>,
    /// Number of source rows `R`.
    pub rows: usize,
    pub sizes: PacketSizes,
    pub soliton: SolitonParams,
    pub seed: u64,
    pub event_cap: u64,
    /// Keep the full event log (per-packet records are always kept).
    pub record_events: bool,
    /// Optional real-valued task; without it results carry no values and
    /// the decoder only tracks structure.
    pub task: Option<SourceTask<f64>>,
}

impl SimConfig {
    pub fn new(helpers: Vec<HelperSpec>, rows: usize, sizes: PacketSizes, seed: u64) -> Self {
        Self {
            helpers,
            rows,
            sizes,
            soliton: SolitonParams::default(),
            seed,
            event_cap: DEFAULT_EVENT_CAP,
            record_events: false,
            task: None,
        }
    }
}

/// What the collector puts into a transmitted packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    /// A fresh LT-coded packet drawn by the engine's encoder.
    Coded,
    /// Uncoded source row `i` (0-based).
    Source(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Coded { coded_id: u64 },
    Source(usize),
}

/// Receipt ACK as seen by the collector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AckInfo {
    pub helper: usize,
    pub packet: u64,
    /// 1-based index of the packet among those sent to this helper.
    pub index: usize,
    pub tx: f64,
}

/// Computed result as seen by the collector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultInfo {
    pub helper: usize,
    pub packet: u64,
    pub index: usize,
    pub tx: f64,
    /// Runtime reported by the helper (only trusted in timestamped mode).
    pub beta: f64,
    pub kind: PacketKind,
    /// False for a repeated uncoded result whose row was already known.
    pub useful: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Action {
    Send { helper: usize, at: f64 },
    CancelSends(usize),
    ArmTimeout { helper: usize, at: f64 },
    DisarmTimeout(usize),
    Stop,
}

/// Collector view handed to scheduler callbacks, plus the action buffer.
#[derive(Debug)]
pub struct Ctx {
    now: f64,
    helpers: usize,
    rows: usize,
    consumed: usize,
    distinct: usize,
    decode_complete: bool,
    actions: Vec<Action>,
}

impl Ctx {
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn helpers(&self) -> usize {
        self.helpers
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Useful results received so far.
    pub fn results_received(&self) -> usize {
        self.consumed
    }

    pub fn decode_complete(&self) -> bool {
        self.decode_complete
    }

    /// Number of distinct source rows whose uncoded result arrived.
    pub fn distinct_sources(&self) -> usize {
        self.distinct
    }

    /// Schedule a send slot for `helper` at absolute time `at`.
    pub fn send(&mut self, helper: usize, at: f64) {
        self.actions.push(Action::Send { helper, at });
    }

    /// Drop every pending send slot of `helper`.
    pub fn cancel_sends(&mut self, helper: usize) {
        self.actions.push(Action::CancelSends(helper));
    }

    /// Arm (or re-arm) the timeout of `helper`; any earlier one is superseded.
    pub fn arm_timeout(&mut self, helper: usize, at: f64) {
        self.actions.push(Action::ArmTimeout { helper, at });
    }

    pub fn disarm_timeout(&mut self, helper: usize) {
        self.actions.push(Action::DisarmTimeout(helper));
    }

    pub fn stop(&mut self) {
        self.actions.push(Action::Stop);
    }

    pub fn stop_requested(&self) -> bool {
        self.actions.contains(&Action::Stop)
    }

    /// Withdraw a stop issued during the current callback.
    pub fn withdraw_stop(&mut self) {
        self.actions.retain(|a| *a != Action::Stop);
    }
}

/// A collector policy driven by the engine.
///
/// Callbacks must be deterministic functions of the events they receive.
pub trait Scheduler {
    fn name(&self) -> &str;
    fn on_start(&mut self, ctx: &mut Ctx);
    /// A previously scheduled send slot fired; return the payload to send
    /// now, or `None` to skip this slot.
    fn on_send_slot(&mut self, ctx: &mut Ctx, helper: usize) -> Option<Payload>;
    fn on_transmission_ack(&mut self, _ctx: &mut Ctx, _ack: &AckInfo) {}
    fn on_result(&mut self, ctx: &mut Ctx, result: &ResultInfo);
    fn on_timeout(&mut self, _ctx: &mut Ctx, _helper: usize) {}
}

impl<S: Scheduler + ?Sized> Scheduler for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn on_start(&mut self, ctx: &mut Ctx) {
        (**self).on_start(ctx)
    }
    fn on_send_slot(&mut self, ctx: &mut Ctx, helper: usize) -> Option<Payload> {
        (**self).on_send_slot(ctx, helper)
    }
    fn on_transmission_ack(&mut self, ctx: &mut Ctx, ack: &AckInfo) {
        (**self).on_transmission_ack(ctx, ack)
    }
    fn on_result(&mut self, ctx: &mut Ctx, result: &ResultInfo) {
        (**self).on_result(ctx, result)
    }
    fn on_timeout(&mut self, ctx: &mut Ctx, helper: usize) {
        (**self).on_timeout(ctx, helper)
    }
}

/// Keeps a run going past the inner scheduler's stop until every helper has
/// delivered at least `min_results[n]` useful results. The inner stop time
/// is kept in `inner_stop`.
#[derive(Debug, Clone)]
pub struct DeferredStop<S> {
    pub inner: S,
    pub min_results: Vec<usize>,
    pub inner_stop: Option<f64>,
    got: Vec<usize>,
}

impl<S: Scheduler> DeferredStop<S> {
    pub fn new(inner: S, min_results: Vec<usize>) -> Self {
        let got = vec![0; min_results.len()];
        Self { inner, min_results, inner_stop: None, got }
    }

    fn settle(&mut self, ctx: &mut Ctx) {
        if ctx.stop_requested() {
            ctx.withdraw_stop();
            self.inner_stop.get_or_insert(ctx.now());
        }
        if self.inner_stop.is_some() && self.got.iter().zip(&self.min_results).all(|(g, m)| g >= m) {
            ctx.stop();
        }
    }
}

impl<S: Scheduler> Scheduler for DeferredStop<S> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn on_start(&mut self, ctx: &mut Ctx) {
        self.inner.on_start(ctx);
        self.settle(ctx);
    }
    fn on_send_slot(&mut self, ctx: &mut Ctx, helper: usize) -> Option<Payload> {
        let p = self.inner.on_send_slot(ctx, helper);
        self.settle(ctx);
        p
    }
    fn on_transmission_ack(&mut self, ctx: &mut Ctx, ack: &AckInfo) {
        self.inner.on_transmission_ack(ctx, ack);
        self.settle(ctx);
    }
    fn on_result(&mut self, ctx: &mut Ctx, result: &ResultInfo) {
        if result.useful {
            self.got[result.helper] += 1;
        }
        self.inner.on_result(ctx, result);
        self.settle(ctx);
    }
    fn on_timeout(&mut self, ctx: &mut Ctx, helper: usize) {
        self.inner.on_timeout(ctx, helper);
        self.settle(ctx);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Send,
    Arrive,
    Ack,
    ComputeStart,
    ComputeDone,
    Result,
    Timeout,
}

impl TraceKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Send => "send",
            Self::Arrive => "arrive",
            Self::Ack => "ack",
            Self::ComputeStart => "compute_start",
            Self::ComputeDone => "compute_done",
            Self::Result => "result",
            Self::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub helper: usize,
    pub kind: TraceKind,
    pub packet: Option<u64>,
}

/// Life of one transmitted packet. Times that did not happen before the
/// stop are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub id: u64,
    pub helper: usize,
    /// 1-based index among packets sent to this helper.
    pub index: usize,
    pub kind: PacketKind,
    pub link: LinkDraw,
    pub tx: f64,
    pub arrival: f64,
    pub ack: Option<f64>,
    pub start: Option<f64>,
    pub beta: Option<f64>,
    pub end: Option<f64>,
    pub result: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub events: Vec<TraceEvent>,
    pub packets: Vec<PacketRecord>,
}

impl RunTrace {
    /// Packets helper `n` finished computing, in compute order.
    pub fn completed(&self, n: usize) -> Vec<&PacketRecord> {
        let mut v: Vec<&PacketRecord> = self.packets.iter().filter(|p| p.helper == n && p.end.is_some()).collect();
        v.sort_by(|a, b| a.start.unwrap().total_cmp(&b.start.unwrap()));
        v
    }

    /// Per-packet idle time before each computation at helper `n`:
    /// 0 for the first, then `start_i − end_{i−1}`.
    pub fn ground_truth_idle(&self, n: usize) -> Vec<f64> {
        let done = self.completed(n);
        let mut out = Vec::with_capacity(done.len());
        for (i, p) in done.iter().enumerate() {
            if i == 0 {
                out.push(0.0);
            } else {
                out.push((p.start.unwrap() - done[i - 1].end.unwrap()).max(0.0));
            }
        }
        out
    }

    /// Queueing wait of each computation at helper `n` (start − arrival),
    /// in compute order.
    pub fn queue_waits(&self, n: usize) -> Vec<f64> {
        self.completed(n).iter().map(|p| p.start.unwrap() - p.arrival).collect()
    }

    /// Event log as CSV with columns `time,helper,event,packet`.
    pub fn events_csv(&self) -> String {
        let mut s = String::from("time,helper,event,packet\n");
        for e in &self.events {
            let pkt = e.packet.map(|p| p.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", e.time, e.helper, e.kind.label(), pkt);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelperMetrics {
    pub sent: usize,
    /// Useful results consumed by the collector (`r_n`).
    pub consumed: usize,
    pub completed: usize,
    pub busy: f64,
    pub idle: f64,
}

impl HelperMetrics {
    /// `busy / (busy + idle)`, `None` before any completion.
    pub fn efficiency(&self) -> Option<f64> {
        if self.completed == 0 {
            None
        } else if self.busy + self.idle == 0.0 {
            Some(1.0)
        } else {
            Some(self.busy / (self.busy + self.idle))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub scheduler: String,
    pub seed: u64,
    pub t_total: f64,
    /// Useful results at stop beyond `R`.
    pub k_actual: usize,
    pub consumed: usize,
    pub packets_sent: usize,
    /// Packets whose work was not consumed: still in flight or computing at
    /// the stop, never computed, or duplicate uncoded results.
    pub waste: usize,
    pub events: u64,
    pub helpers: Vec<HelperMetrics>,
}

impl RunMetrics {
    pub fn efficiencies(&self) -> Vec<f64> {
        self.helpers.iter().filter_map(HelperMetrics::efficiency).collect()
    }

    pub fn mean_efficiency(&self) -> f64 {
        let e = self.efficiencies();
        if e.is_empty() {
            f64::NAN
        } else {
            e.iter().sum::<f64>() / e.len() as f64
        }
    }

    pub fn min_efficiency(&self) -> f64 {
        self.efficiencies().into_iter().fold(f64::NAN, f64::min)
    }

    pub fn r_n(&self) -> Vec<usize> {
        self.helpers.iter().map(|h| h.consumed).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub trace: RunTrace,
    /// Decoded `y` when a real task was attached and decoding completed.
    pub decoded: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    SendSlot { helper: usize, gen: u64 },
    Arrive(u64),
    Ack(u64),
    Done(u64),
    Result(u64),
    Timeout { helper: usize, gen: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Default)]
struct HelperState {
    queue: VecDeque<u64>,
    computing: Option<u64>,
    computed: usize,
    sent: usize,
    last_arrival: f64,
    last_result: f64,
    send_gen: u64,
    timeout_gen: u64,
    consumed: usize,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    tapes: Tapes,
    heap: BinaryHeap<Event>,
    seq: u64,
    now: f64,
    helpers: Vec<HelperState>,
    packets: Vec<PacketRecord>,
    values: Vec<f64>,
    headers: Vec<Vec<usize>>,
    events: Vec<TraceEvent>,
    encoder: LtEncoder,
    code_rng: ChaCha8Rng,
    decoder: PeelingDecoder<f64>,
    seen_source: Vec<bool>,
    distinct: usize,
    consumed: usize,
    processed: u64,
    stopped: bool,
}

impl<'a> Sim<'a> {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Event { time, seq: self.seq, kind });
    }

    fn log(&mut self, helper: usize, kind: TraceKind, packet: Option<u64>) {
        if self.cfg.record_events {
            self.events.push(TraceEvent { time: self.now, helper, kind, packet });
        }
    }

    fn ctx(&self) -> Ctx {
        Ctx {
            now: self.now,
            helpers: self.helpers.len(),
            rows: self.cfg.rows,
            consumed: self.consumed,
            distinct: self.distinct,
            decode_complete: self.decoder.decode_complete(),
            actions: Vec::new(),
        }
    }

    fn violation(&self, msg: String) -> EngineError {
        EngineError::Contract { time: self.now, msg }
    }

    fn apply(&mut self, ctx: Ctx) -> Result<()> {
        let n = self.helpers.len();
        for a in ctx.actions {
            match a {
                Action::Send { helper, at } => {
                    if helper >= n {
                        return Err(self.violation(format!("send to unknown helper {helper}")));
                    }
                    if !at.is_finite() || at < self.now {
                        return Err(self.violation(format!("send for helper {helper} requested at {at}")));
                    }
                    let gen = self.helpers[helper].send_gen;
                    self.push(at, EventKind::SendSlot { helper, gen });
                }
                Action::CancelSends(helper) => {
                    if helper >= n {
                        return Err(self.violation(format!("cancel for unknown helper {helper}")));
                    }
                    self.helpers[helper].send_gen += 1;
                }
                Action::ArmTimeout { helper, at } => {
                    if helper >= n {
                        return Err(self.violation(format!("timeout for unknown helper {helper}")));
                    }
                    if at.is_nan() || at < self.now {
                        return Err(self.violation(format!("timeout for helper {helper} armed at {at}")));
                    }
                    self.helpers[helper].timeout_gen += 1;
                    if at.is_finite() {
                        let gen = self.helpers[helper].timeout_gen;
                        self.push(at, EventKind::Timeout { helper, gen });
                    }
                }
                Action::DisarmTimeout(helper) => {
                    if helper >= n {
                        return Err(self.violation(format!("timeout for unknown helper {helper}")));
                    }
                    self.helpers[helper].timeout_gen += 1;
                }
                Action::Stop => self.stopped = true,
            }
        }
        Ok(())
    }

    fn transmit(&mut self, helper: usize, payload: Payload) -> Result<()> {
        let kind = match payload {
            Payload::Coded => {
                let header = self.encoder.next_header(&mut self.code_rng);
                let id = header.coded_id;
                let value = match &self.cfg.task {
                    Some(task) => codec::compute_product(&codec::build_packet(task, header.clone()), task.x())?,
                    None => 0.0,
                };
                self.headers.push(header.sources);
                self.values.push(value);
                PacketKind::Coded { coded_id: id }
            }
            Payload::Source(i) => {
                if i >= self.cfg.rows {
                    return Err(self.violation(format!("source row {i} out of range")));
                }
                let value = match &self.cfg.task {
                    Some(task) => task.row(i).iter().zip(task.x()).map(|(a, b)| a * b).sum(),
                    None => 0.0,
                };
                self.headers.push(vec![i]);
                self.values.push(value);
                PacketKind::Source(i)
            }
        };
        let id = self.packets.len() as u64;
        let h = &mut self.helpers[helper];
        let link = self.tapes.link(helper, h.sent);
        h.sent += 1;
        let arrival = (self.now + link.data_delay(&self.cfg.sizes)).max(h.last_arrival);
        h.last_arrival = arrival;
        self.packets.push(PacketRecord {
            id,
            helper,
            index: h.sent,
            kind,
            link,
            tx: self.now,
            arrival,
            ack: None,
            start: None,
            beta: None,
            end: None,
            result: None,
        });
        self.log(helper, TraceKind::Send, Some(id));
        self.push(arrival, EventKind::Arrive(id));
        Ok(())
    }

    fn start_next(&mut self, helper: usize) {
        let h = &mut self.helpers[helper];
        if h.computing.is_some() {
            return;
        }
        let Some(id) = h.queue.pop_front() else { return };
        h.computing = Some(id);
        let beta = self.tapes.runtime(helper, h.computed);
        h.computed += 1;
        let p = &mut self.packets[id as usize];
        p.start = Some(self.now);
        p.beta = Some(beta);
        self.log(helper, TraceKind::ComputeStart, Some(id));
        if beta.is_finite() {
            self.push(self.now + beta, EventKind::Done(id));
        }
    }

    fn run(&mut self, sched: &mut dyn Scheduler) -> Result<()> {
        let mut ctx = self.ctx();
        sched.on_start(&mut ctx);
        self.apply(ctx)?;
        while !self.stopped {
            let Some(ev) = self.heap.pop() else {
                return Err(EngineError::Stalled { time: self.now });
            };
            self.processed += 1;
            if self.processed > self.cfg.event_cap {
                return Err(EngineError::EventCap(self.cfg.event_cap));
            }
            self.now = ev.time;
            match ev.kind {
                EventKind::SendSlot { helper, gen } => {
                    if gen != self.helpers[helper].send_gen {
                        continue;
                    }
                    let mut ctx = self.ctx();
                    let payload = sched.on_send_slot(&mut ctx, helper);
                    if let Some(p) = payload {
                        self.transmit(helper, p)?;
                    }
                    self.apply(ctx)?;
                }
                EventKind::Arrive(id) => {
                    let p = &self.packets[id as usize];
                    let helper = p.helper;
                    let ack_at = self.now + p.link.ack_delay(&self.cfg.sizes);
                    self.log(helper, TraceKind::Arrive, Some(id));
                    self.push(ack_at, EventKind::Ack(id));
                    self.helpers[helper].queue.push_back(id);
                    self.start_next(helper);
                }
                EventKind::Ack(id) => {
                    let p = &mut self.packets[id as usize];
                    p.ack = Some(self.now);
                    let info = AckInfo { helper: p.helper, packet: id, index: p.index, tx: p.tx };
                    self.log(info.helper, TraceKind::Ack, Some(id));
                    let mut ctx = self.ctx();
                    sched.on_transmission_ack(&mut ctx, &info);
                    self.apply(ctx)?;
                }
                EventKind::Done(id) => {
                    let p = &mut self.packets[id as usize];
                    p.end = Some(self.now);
                    let helper = p.helper;
                    let h = &mut self.helpers[helper];
                    let at = (self.now + p.link.result_delay(&self.cfg.sizes)).max(h.last_result);
                    h.last_result = at;
                    h.computing = None;
                    self.log(helper, TraceKind::ComputeDone, Some(id));
                    self.push(at, EventKind::Result(id));
                    self.start_next(helper);
                }
                EventKind::Result(id) => {
                    let idx = id as usize;
                    self.packets[idx].result = Some(self.now);
                    let p = &self.packets[idx];
                    let useful = match p.kind {
                        PacketKind::Coded { .. } => {
                            let sources = std::mem::take(&mut self.headers[idx]);
                            self.decoder.add(&sources, self.values[idx])?;
                            true
                        }
                        PacketKind::Source(i) => {
                            if self.seen_source[i] {
                                false
                            } else {
                                self.seen_source[i] = true;
                                self.distinct += 1;
                                self.decoder.add(&[i], self.values[idx])?;
                                true
                            }
                        }
                    };
                    let info = ResultInfo {
                        helper: p.helper,
                        packet: id,
                        index: p.index,
                        tx: p.tx,
                        beta: p.beta.expect("computed"),
                        kind: p.kind,
                        useful,
                    };
                    if useful {
                        self.consumed += 1;
                        self.helpers[info.helper].consumed += 1;
                    }
                    self.log(info.helper, TraceKind::Result, Some(id));
                    let mut ctx = self.ctx();
                    sched.on_result(&mut ctx, &info);
                    self.apply(ctx)?;
                }
                EventKind::Timeout { helper, gen } => {
                    if gen != self.helpers[helper].timeout_gen {
                        continue;
                    }
                    self.log(helper, TraceKind::Timeout, None);
                    let mut ctx = self.ctx();
                    sched.on_timeout(&mut ctx, helper);
                    self.apply(ctx)?;
                }
            }
        }
        Ok(())
    }

    fn metrics(&self, name: &str) -> RunMetrics {
        let mut helpers: Vec<HelperMetrics> = self
            .helpers
            .iter()
            .map(|h| HelperMetrics { sent: h.sent, consumed: h.consumed, completed: 0, busy: 0.0, idle: 0.0 })
            .collect();
        let mut spans: Vec<Vec<(f64, f64)>> = vec![Vec::new(); helpers.len()];
        for p in &self.packets {
            if let (Some(s), Some(e)) = (p.start, p.end) {
                spans[p.helper].push((s, e));
            }
        }
        for (m, mut s) in helpers.iter_mut().zip(spans) {
            s.sort_by(|a, b| a.0.total_cmp(&b.0));
            m.completed = s.len();
            m.busy = s.iter().map(|(a, b)| b - a).sum();
            m.idle = s.windows(2).map(|w| (w[1].0 - w[0].1).max(0.0)).sum();
        }
        let sent = self.packets.len();
        RunMetrics {
            scheduler: name.to_string(),
            seed: self.cfg.seed,
            t_total: self.now,
            k_actual: self.consumed.saturating_sub(self.cfg.rows),
            consumed: self.consumed,
            packets_sent: sent,
            waste: sent - self.consumed,
            events: self.processed,
            helpers,
        }
    }
}

/// Simulate until `sched` stops. Deterministic in `(cfg, sched)`.
pub fn run(cfg: &SimConfig, sched: &mut dyn Scheduler) -> Result<RunOutput> {
    run_with_tapes(cfg, Tapes::new(&cfg.helpers, cfg.seed), sched)
}

/// As [`run`], with tapes supplied by the caller (e.g. shared with an
/// oracle scheduler).
pub fn run_with_tapes(cfg: &SimConfig, tapes: Tapes, sched: &mut dyn Scheduler) -> Result<RunOutput> {
    if cfg.helpers.is_empty() {
        return Err(EngineError::Config("no helpers".into()));
    }
    if cfg.rows == 0 {
        return Err(EngineError::Config("R must be positive".into()));
    }
    if tapes.len() != cfg.helpers.len() {
        return Err(EngineError::Config("tape count does not match helper count".into()));
    }
    if let Some(t) = &cfg.task {
        if t.len() != cfg.rows {
            return Err(EngineError::Config(format!("task has {} rows, config says {}", t.len(), cfg.rows)));
        }
    }
    let mut code_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    code_rng.set_stream(u64::MAX - 1);
    let mut sim = Sim {
        cfg,
        tapes,
        heap: BinaryHeap::new(),
        seq: 0,
        now: 0.0,
        helpers: (0..cfg.helpers.len()).map(|_| HelperState::default()).collect(),
        packets: Vec::new(),
        values: Vec::new(),
        headers: Vec::new(),
        events: Vec::new(),
        encoder: LtEncoder::new(cfg.rows, cfg.soliton).map_err(EngineError::Codec)?,
        code_rng,
        decoder: PeelingDecoder::new(cfg.rows),
        seen_source: vec![false; cfg.rows],
        distinct: 0,
        consumed: 0,
        processed: 0,
        stopped: false,
    };
    sim.run(sched)?;
    let metrics = sim.metrics(sched.name());
    let decoded = match (&cfg.task, sim.decoder.decode_complete()) {
        (Some(_), true) => Some(sim.decoder.decoded_y()?),
        _ => None,
    };
    Ok(RunOutput { metrics, trace: RunTrace { events: sim.events, packets: sim.packets }, decoded })
}
