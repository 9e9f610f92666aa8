//! Browser bindings. Each export takes plain numbers and returns a JSON
//! string; the `*_data` functions behind them are ordinary Rust.

use c3p_core::codec::{measure_overhead, RobustSoliton, SolitonParams};
use c3p_core::workload::{ChannelModel, HelperProfile, HelperSpec, PacketSizes, RuntimeScenario};
use c3p_core::{run_kind, theory, RunSpec, SchedulerKind, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_HELPERS: usize = 64;
const MAX_ROWS: usize = 5000;

#[derive(Debug, Serialize)]
pub struct Bar {
    pub helper: usize,
    pub tx: f64,
    pub start: f64,
    pub end: f64,
    pub useful: bool,
}

#[derive(Debug, Serialize)]
pub struct Timeline {
    pub scheduler: &'static str,
    pub t_total: f64,
    pub packets_sent: usize,
    pub waste: usize,
    pub efficiency: Vec<f64>,
    pub mean_runtime: Vec<f64>,
    pub bars: Vec<Bar>,
}

/// One run on `helpers` helpers whose mean runtimes spread from 0.5 s to
/// `spread`× slower, each on a Poisson channel averaging `mbps`.
pub fn timeline_data(
    scheduler: &str,
    helpers: usize,
    rows: usize,
    spread: f64,
    mbps: f64,
    fixed_runtimes: bool,
    seed: u64,
) -> Result<Timeline, String> {
    if !(1..=MAX_HELPERS).contains(&helpers) || !(1..=MAX_ROWS).contains(&rows) {
        return Err(format!("need 1..={MAX_HELPERS} helpers and 1..={MAX_ROWS} rows"));
    }
    if !(spread >= 1.0 && mbps > 0.0) {
        return Err("spread must be at least 1 and the channel rate positive".into());
    }
    let kind: SchedulerKind = scheduler.parse().map_err(|e| format!("{e}"))?;
    let scenario = if fixed_runtimes { RuntimeScenario::FixedPerHelper } else { RuntimeScenario::PerPacketIid };
    let specs = (0..helpers)
        .map(|n| {
            let slow = if helpers == 1 { 1.0 } else { 1.0 + (spread - 1.0) * n as f64 / (helpers - 1) as f64 };
            // shift and exponential part both scale with the slowdown
            let profile = HelperProfile::new(n, 0.25 * slow, 4.0 / slow, scenario, ChannelModel::poisson(mbps * 1e6))
                .map_err(|e| e.to_string())?;
            Ok(HelperSpec::sampled(profile))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let spec = RunSpec::new(SimConfig::new(specs, rows, PacketSizes::for_rows(rows), seed));
    let mean_runtime = spec.sim.helpers.iter().map(|h| h.profile.mean_runtime()).collect();
    let out = run_kind(kind, &spec).map_err(|e| e.to_string())?;
    let used: std::collections::HashSet<(usize, usize)> = out
        .trace
        .packets
        .iter()
        .filter(|p| p.result.is_some_and(|r| r <= out.metrics.t_total))
        .map(|p| (p.helper, p.index))
        .collect();
    let bars = out
        .trace
        .packets
        .iter()
        .filter_map(|p| {
            let (start, end) = (p.start?, p.end?);
            Some(Bar { helper: p.helper, tx: p.tx, start, end, useful: used.contains(&(p.helper, p.index)) })
        })
        .collect();
    Ok(Timeline {
        scheduler: kind.label(),
        t_total: out.metrics.t_total,
        packets_sent: out.metrics.packets_sent,
        waste: out.metrics.waste,
        efficiency: out.metrics.efficiencies(),
        mean_runtime,
        bars,
    })
}

#[derive(Debug, Serialize)]
pub struct IdleCurve {
    pub rtt: Vec<f64>,
    pub expected_tu: Vec<f64>,
    pub efficiency: Vec<f64>,
    /// Monte-Carlo idle time at a few round trips, as `[rtt, mean]` pairs.
    pub monte_carlo: Vec<[f64; 2]>,
}

/// Expected idle time and efficiency as the round trip grows from 0 to `rtt_max`.
pub fn idle_curve_data(mu: f64, a: f64, rtt_max: f64, points: usize, seed: u64) -> Result<IdleCurve, String> {
    if !(mu > 0.0 && a >= 0.0 && rtt_max > 0.0 && (2..=2000).contains(&points)) {
        return Err("need mu > 0, a ≥ 0, rtt_max > 0 and 2..=2000 points".into());
    }
    let rtt: Vec<f64> = (0..points).map(|i| rtt_max * i as f64 / (points - 1) as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let monte_carlo = (0..=4)
        .map(|i| {
            let r = rtt_max * i as f64 / 4.0;
            [r, theory::expected_tu_mc(mu, a, r, 20_000, &mut rng)]
        })
        .collect();
    Ok(IdleCurve {
        expected_tu: rtt.iter().map(|&r| theory::expected_tu(mu, a, r)).collect(),
        efficiency: rtt.iter().map(|&r| theory::efficiency_theoretical(mu, a, r)).collect(),
        rtt,
        monte_carlo,
    })
}

#[derive(Debug, Serialize)]
pub struct SolitonView {
    /// `pmf[d-1]` for degree `d`, truncated where the tail is negligible.
    pub pmf: Vec<f64>,
    pub mean_degree: f64,
    /// Extra packets needed per trial, as a fraction of `rows`.
    pub overhead: Vec<f64>,
}

pub fn soliton_data(rows: usize, c: f64, delta: f64, trials: usize, seed: u64) -> Result<SolitonView, String> {
    if !(1..=MAX_ROWS).contains(&rows) || !(1..=500).contains(&trials) {
        return Err(format!("need 1..={MAX_ROWS} rows and 1..=500 trials"));
    }
    let params = SolitonParams { c, delta };
    let dist = RobustSoliton::new(rows, params).map_err(|e| e.to_string())?;
    let mut pmf: Vec<f64> = (1..=dist.max_degree()).map(|d| dist.pmf(d)).collect();
    while pmf.len() > 1 && pmf.last().is_some_and(|p| *p < 1e-6) {
        pmf.pop();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let overhead = (0..trials)
        .map(|_| measure_overhead(&mut rng, rows, params).map(|k| k as f64 / rows as f64))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok(SolitonView { pmf, mean_degree: dist.mean(), overhead })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn timeline(
    scheduler: &str,
    helpers: usize,
    rows: usize,
    spread: f64,
    mbps: f64,
    fixed_runtimes: bool,
    seed: u32,
) -> Result<String, JsError> {
    to_js(timeline_data(scheduler, helpers, rows, spread, mbps, fixed_runtimes, seed as u64))
}

#[wasm_bindgen]
pub fn idle_curve(mu: f64, a: f64, rtt_max: f64, points: usize, seed: u32) -> Result<String, JsError> {
    to_js(idle_curve_data(mu, a, rtt_max, points, seed as u64))
}

#[wasm_bindgen]
pub fn soliton(rows: usize, c: f64, delta: f64, trials: usize, seed: u32) -> Result<String, JsError> {
    to_js(soliton_data(rows, c, delta, trials, seed as u64))
}
