//! Battery of closed-form, Monte-Carlo and replay checks.

use std::path::Path;

use c3p_core::engine::{self, Ctx, Payload, ResultInfo, Scheduler};
use c3p_core::workload::{ChannelModel, HelperProfile, HelperSpec, PacketSizes, RuntimeScenario};
use c3p_core::{theory, EstimatorMode, SimConfig, Tapes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::experiment::write_csv;
use crate::{replay, CliError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub passed: bool,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn near(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            check: name.to_string(),
            passed: (value - expected).abs() <= tolerance,
            value,
            expected,
            tolerance,
            detail: String::new(),
        }
    }

    fn holds(name: &str, passed: bool, detail: String) -> Self {
        Self { check: name.to_string(), passed, value: passed as u8 as f64, expected: 1.0, tolerance: 0.0, detail }
    }

    fn with(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }
}

pub type TuFn = fn(f64, f64, f64) -> f64;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Closed form under test for the expected idle time `(μ, a, rtt)`.
    pub expected_tu: TuFn,
    pub tu_samples: usize,
    pub idle_prob_samples: usize,
    pub prefixes: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            expected_tu: theory::expected_tu,
            tu_samples: 1_000_000,
            idle_prob_samples: 100_000,
            prefixes: 10_000,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            s += &format!(
                "{tag}  {:<34} value={:<12.6} expected={:<12.6} tol={:e}",
                c.check, c.value, c.expected, c.tolerance
            );
            if !c.detail.is_empty() {
                s += &format!("  {}", c.detail);
            }
            s.push('\n');
        }
        let failed = self.failures().count();
        s += &format!("{} checks, {} failed\n", self.checks.len(), failed);
        s
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        write_csv(&dir.join("verify.csv"), &self.checks)
    }
}

pub fn verify(opts: &VerifyOptions) -> Result<Report, CliError> {
    let mut checks = Vec::new();
    replays(&mut checks)?;
    idle_closed_form(opts, &mut checks);
    queue_recursions(&mut checks)?;
    suffix_equivalence(opts, &mut checks);
    idle_probability(opts, &mut checks);
    delay_predictions(&mut checks)?;
    Ok(Report { checks })
}

fn replays(out: &mut Vec<Check>) -> Result<(), CliError> {
    let [naive, equal, aware] = replay::upfront_splits()?;
    out.push(Check::near("replay_uncoded_equal_blocks", naive, 20.0, 0.0));
    out.push(Check::near("replay_coded_equal_shares", equal, 6.0, 0.0));
    out.push(Check::near("replay_coded_speed_shares", aware, 4.0, 0.0));
    for mode in [EstimatorMode::Timestamped, EstimatorMode::Inferred] {
        let tag = match mode {
            EstimatorMode::Timestamped => "timestamped",
            EstimatorMode::Inferred => "inferred",
        };
        let c = replay::c3p_on_irregular(mode)?.metrics.t_total;
        out.push(Check::near(&format!("replay_c3p_irregular_{tag}"), c, 3.5, 0.0));
        let rr = replay::rr_on_irregular(mode)?.metrics.t_total;
        out.push(Check::near(&format!("replay_rr_irregular_{tag}"), rr, 5.0, 0.0));
    }
    Ok(())
}

fn idle_closed_form(opts: &VerifyOptions, out: &mut Vec<Check>) {
    let tu = opts.expected_tu;
    let e = std::f64::consts::E;
    out.push(Check::near("expected_tu_zero_rtt", tu(1.7, 0.3, 0.0), 0.0, 1e-12));
    out.push(Check::near("expected_tu_rtt_beyond_mean_gap", tu(2.0, 0.4, 0.75), 1.0 / (2.0 * e), 1e-12));
    let mu = 3.0;
    let below = tu(mu, 0.2, 1.0 / mu - 1e-12);
    out.push(Check::near("expected_tu_branch_continuity", below, tu(mu, 0.2, 1.0 / mu), 1e-9));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    let mut worst_at = (0.0, 0.0, 0.0);
    let mut identity: f64 = 0.0;
    for _ in 0..20 {
        let mu = rng.random_range(0.5..5.0);
        let a = rng.random_range(0.0..1.0);
        let rtt = rng.random_range(0.0..2.0 / mu);
        let mc = theory::expected_tu_mc(mu, a, rtt, opts.tu_samples, &mut rng);
        let d = (tu(mu, a, rtt) - mc).abs();
        if d > worst {
            worst = d;
            worst_at = (mu, a, rtt);
        }
        let g = theory::efficiency_theoretical(mu, a, rtt);
        identity = identity.max((g - (1.0 - theory::expected_tu(mu, a, rtt) / (a + 1.0 / mu))).abs());
    }
    out.push(Check::near("expected_tu_vs_monte_carlo", worst, 0.0, 1e-2).with(format!(
        "20 triples, {} samples, worst at mu={:.3} a={:.3} rtt={:.3}",
        opts.tu_samples, worst_at.0, worst_at.1, worst_at.2
    )));
    out.push(Check::near("efficiency_equals_one_minus_idle_share", identity, 0.0, 1e-12));
    out.push(Check::near("efficiency_zero_rtt", theory::efficiency_theoretical(2.0, 0.5, 0.0), 1.0, 1e-12));
    out.push(Check::near(
        "efficiency_shift_equals_mean_gap",
        theory::efficiency_theoretical(2.0, 0.5, 1.0),
        (2.0 * e - 1.0) / (2.0 * e),
        1e-12,
    ));
}

/// Sends one packet every `period` seconds to helper 0.
struct Metronome {
    period: f64,
    stop_at: usize,
}

impl Scheduler for Metronome {
    fn name(&self) -> &str {
        "metronome"
    }
    fn on_start(&mut self, ctx: &mut Ctx) {
        ctx.send(0, 0.0);
    }
    fn on_send_slot(&mut self, ctx: &mut Ctx, helper: usize) -> Option<Payload> {
        ctx.send(helper, ctx.now() + self.period);
        Some(Payload::Coded)
    }
    fn on_result(&mut self, ctx: &mut Ctx, _: &ResultInfo) {
        if ctx.results_received() >= self.stop_at {
            ctx.stop();
        }
    }
}

fn queue_recursions(out: &mut Vec<Check>) -> Result<(), CliError> {
    out.push(Check::near("queue_wait_after_long_job", theory::tq_trace(&[3.5], 2.0)[1], 1.5, 1e-12));
    out.push(Check::near("queue_wait_clamped_at_zero", theory::tq_trace(&[1.0], 2.0)[1], 0.0, 0.0));
    out.push(Check::near("idle_capped_by_round_trip", theory::tu_model(&[1.0], 2.0, 0.5)[1], 0.5, 1e-12));
    out.push(Check::near("idle_equals_shortfall", theory::tu_model(&[1.8], 2.0, 0.5)[1], 0.2, 1e-12));
    out.push(Check::near("idle_zero_after_slow_job", theory::tu_model(&[2.5], 2.0, 0.5)[1], 0.0, 0.0));

    // the recursion against the simulator's own queue at zero delay
    let profile = HelperProfile::new(0, 0.5, 2.0, RuntimeScenario::PerPacketIid, ChannelModel::Instant)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = SimConfig::new(vec![HelperSpec::sampled(profile)], 500, PacketSizes::for_rows(500), 12);
    let mut tapes = Tapes::new(&cfg.helpers, cfg.seed);
    let betas: Vec<f64> = (0..500).map(|k| tapes.runtime(0, k)).collect();
    let run = engine::run(&cfg, &mut Metronome { period: 1.0, stop_at: 500 })?;
    let model = theory::tq_trace(&betas, 1.0);
    let err = run.trace.queue_waits(0).iter().zip(&model).map(|(w, q)| (w - q).abs()).fold(0.0, f64::max);
    out.push(Check::near("queue_recursion_matches_simulator", err, 0.0, 1e-9).with("500 packets".into()));
    Ok(())
}

fn suffix_equivalence(opts: &VerifyOptions, out: &mut Vec<Check>) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut mismatches = 0usize;
    for _ in 0..opts.prefixes {
        let i = rng.random_range(1..=20);
        let mean = rng.random_range(0.5..2.0);
        let betas: Vec<f64> = (0..i).map(|_| rng.random_range(0.0..2.0 * mean)).collect();
        let tu = theory::tu_model(&betas, mean, f64::INFINITY);
        if (tu[i] > 0.0) != theory::suffix_condition(&betas, mean) {
            mismatches += 1;
        }
    }
    out.push(
        Check::near("suffix_condition_iff_idle", mismatches as f64, 0.0, 0.0)
            .with(format!("{} random prefixes", opts.prefixes)),
    );
}

fn idle_probability(opts: &VerifyOptions, out: &mut Vec<Check>) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(7));
    let n = opts.idle_prob_samples;
    let p = theory::pr_tu_positive_curve(30, 2.0, 0.5, n, &mut rng);
    let target = 1.0 - (-1.0f64).exp();
    out.push(Check::near("idle_probability_first_packet", p[0], target, 0.01 * target));
    let sigma = |q: f64| (q * (1.0 - q) / n as f64).sqrt();
    let rises: Vec<usize> =
        (1..p.len()).filter(|&i| p[i] > p[i - 1] + 2.0 * sigma(p[i - 1]).max(sigma(p[i]))).collect();
    out.push(Check::holds(
        "idle_probability_non_increasing",
        rises.is_empty(),
        format!("i=1..30, {n} samples, p30={:.4}, rises at {rises:?}", p[29]),
    ));
    out.push(Check::holds("idle_probability_decays", p[29] < p[0], format!("p1={:.4} p30={:.4}", p[0], p[29])));
}

fn delay_predictions(out: &mut Vec<Check>) -> Result<(), CliError> {
    let means = [1.5, 1.0, 0.75, 2.25];
    let (r, k) = (8000, 400);
    let t = theory::predict_t_c3p(&means, r, k)?;
    let shares = theory::predict_r_c3p(&means, r, k)?;
    let spread = shares.iter().zip(&means).map(|(s, m)| (s * m - t).abs()).fold(0.0, f64::max);
    out.push(Check::near("helpers_finish_together", spread, 0.0, 1e-9 * t));
    let no_overhead = theory::predict_t_c3p(&means, r, 0)?;
    out.push(Check::near("zero_overhead_matches_static", no_overhead, theory::predict_t_static(&means, r)?, 1e-12 * t));
    let equal = theory::predict_r_c3p(&[2.0; 5], 100, 5)?;
    out.push(Check::near("equal_helpers_equal_shares", equal[3], 21.0, 1e-12));
    Ok(())
}
