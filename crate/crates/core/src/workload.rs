//! Helper runtime and channel models.
//!
//! Runtimes are shifted exponential. Channel rates are Poisson counts of a
//! rate quantum (1 Mb/s by default) around a per-helper mean that is drawn
//! once per run. All times are seconds, all sizes bits.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("invalid workload parameter: {0}")]
    Config(String),
}

type Result<T> = std::result::Result<T, WorkloadError>;

pub const MBPS: f64 = 1.0e6;
pub const DEFAULT_RATE_FLOOR_BPS: f64 = 0.1 * MBPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuntimeScenario {
    /// A fresh shifted-exponential draw for every packet.
    PerPacketIid,
    /// One draw per helper, reused for every packet.
    FixedPerHelper,
}

impl RuntimeScenario {
    pub fn label(self) -> &'static str {
        match self {
            Self::PerPacketIid => "per_packet_iid",
            Self::FixedPerHelper => "fixed_per_helper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    /// Zero transmission delay in both directions.
    Instant,
    /// Constant rates.
    Fixed { up_bps: f64, down_bps: f64 },
    /// Per-message rate `quantum · Poisson(mean/quantum)`, floored.
    Poisson { mean_bps: f64, floor_bps: f64, quantum_bps: f64 },
}

impl ChannelModel {
    pub fn poisson(mean_bps: f64) -> Self {
        Self::Poisson { mean_bps, floor_bps: DEFAULT_RATE_FLOOR_BPS, quantum_bps: MBPS }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Instant => Ok(()),
            Self::Fixed { up_bps, down_bps } => {
                if up_bps > 0.0 && down_bps > 0.0 {
                    Ok(())
                } else {
                    Err(WorkloadError::Config(format!("rates must be positive: {up_bps}, {down_bps}")))
                }
            }
            Self::Poisson { mean_bps, floor_bps, quantum_bps } => {
                if mean_bps > 0.0 && floor_bps > 0.0 && quantum_bps > 0.0 {
                    Ok(())
                } else {
                    Err(WorkloadError::Config("poisson channel parameters must be positive".into()))
                }
            }
        }
    }

    /// One rate draw in bits/s (infinite for an instant channel).
    pub fn sample_rate<G: Rng + ?Sized>(&self, rng: &mut G, uplink: bool) -> f64 {
        match *self {
            Self::Instant => f64::INFINITY,
            Self::Fixed { up_bps, down_bps } => {
                if uplink {
                    up_bps
                } else {
                    down_bps
                }
            }
            Self::Poisson { mean_bps, floor_bps, quantum_bps } => {
                let count: f64 = Poisson::new(mean_bps / quantum_bps).expect("validated").sample(rng);
                (count * quantum_bps).max(floor_bps)
            }
        }
    }

    /// `E[bits / C]`, exact for every model (Poisson by summing the pmf).
    pub fn expected_delay(&self, bits: f64, uplink: bool) -> f64 {
        match *self {
            Self::Instant => 0.0,
            Self::Fixed { up_bps, down_bps } => bits / if uplink { up_bps } else { down_bps },
            Self::Poisson { mean_bps, floor_bps, quantum_bps } => {
                let lambda = mean_bps / quantum_bps;
                let upper = (lambda + 40.0 * lambda.sqrt() + 40.0).ceil() as u64;
                let mut pmf = (-lambda).exp();
                let mut acc = 0.0;
                for k in 0..=upper {
                    if k > 0 {
                        pmf *= lambda / k as f64;
                    }
                    acc += pmf / (k as f64 * quantum_bps).max(floor_bps);
                }
                bits * acc
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketSizes {
    pub data_bits: f64,
    pub result_bits: f64,
    pub ack_bits: f64,
}

impl PacketSizes {
    pub fn new(data_bits: f64, result_bits: f64, ack_bits: f64) -> Result<Self> {
        if data_bits > 0.0 && result_bits > 0.0 && ack_bits > 0.0 {
            Ok(Self { data_bits, result_bits, ack_bits })
        } else {
            Err(WorkloadError::Config(format!(
                "packet sizes must be positive: B_x={data_bits}, B_r={result_bits}, B_ack={ack_bits}"
            )))
        }
    }

    /// `B_x = 8R`, `B_r = 8`, `B_ack = 1`.
    pub fn for_rows(r: usize) -> Self {
        Self { data_bits: 8.0 * r as f64, result_bits: 8.0, ack_bits: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelperProfile {
    pub helper_id: usize,
    /// Shift `a_n` in seconds.
    pub shift: f64,
    /// Rate `μ_n` in 1/seconds.
    pub rate: f64,
    pub scenario: RuntimeScenario,
    pub channel: ChannelModel,
    /// Cached per-helper runtime in [`RuntimeScenario::FixedPerHelper`] mode.
    #[serde(default)]
    pub fixed_beta: Option<f64>,
}

impl HelperProfile {
    pub fn new(
        helper_id: usize,
        shift: f64,
        rate: f64,
        scenario: RuntimeScenario,
        channel: ChannelModel,
    ) -> Result<Self> {
        if !(shift >= 0.0 && shift.is_finite()) {
            return Err(WorkloadError::Config(format!("shift must be non-negative, got {shift}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(WorkloadError::Config(format!("rate must be positive, got {rate}")));
        }
        channel.validate()?;
        Ok(Self { helper_id, shift, rate, scenario, channel, fixed_beta: None })
    }

    /// `a + 1/μ`.
    pub fn mean_runtime(&self) -> f64 {
        self.shift + 1.0 / self.rate
    }

    /// Mean data round trip `E[B_x/C_up] + E[B_r/C_down]`.
    pub fn expected_rtt_data(&self, sizes: &PacketSizes) -> f64 {
        self.channel.expected_delay(sizes.data_bits, true) + self.channel.expected_delay(sizes.result_bits, false)
    }
}

pub fn sample_runtime<G: Rng + ?Sized>(profile: &mut HelperProfile, rng: &mut G) -> f64 {
    let draw = |rng: &mut G| profile.shift + Exp::new(profile.rate).expect("validated").sample(rng);
    match profile.scenario {
        RuntimeScenario::PerPacketIid => draw(rng),
        RuntimeScenario::FixedPerHelper => match profile.fixed_beta {
            Some(b) => b,
            None => {
                let b = draw(rng);
                profile.fixed_beta = Some(b);
                b
            }
        },
    }
}

pub fn sample_channel_delay<G: Rng + ?Sized>(
    bits: f64,
    profile: &HelperProfile,
    rng: &mut G,
    uplink: bool,
) -> Result<f64> {
    if bits.is_nan() || bits <= 0.0 {
        return Err(WorkloadError::Config(format!("message size must be positive, got {bits}")));
    }
    Ok(bits / profile.channel.sample_rate(rng, uplink))
}

/// `B_x / C_up + B_r / C_down` for one packet.
pub fn rtt_data_true(sizes: &PacketSizes, up_bps: f64, down_bps: f64) -> Result<f64> {
    if !(sizes.data_bits > 0.0 && sizes.result_bits > 0.0) {
        return Err(WorkloadError::Config("B_x and B_r must be positive".into()));
    }
    if !(up_bps > 0.0 && down_bps > 0.0) {
        return Err(WorkloadError::Config("rates must be positive".into()));
    }
    Ok(sizes.data_bits / up_bps + sizes.result_bits / down_bps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftRule {
    Fixed(f64),
    /// `a_n = 1/μ_n`.
    InverseRate,
}

/// How a helper population is drawn for one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub rate_set: Vec<f64>,
    pub shift: ShiftRule,
    /// Interval the per-helper mean channel rate is drawn from, in Mb/s.
    /// `None` gives an instant channel.
    pub channel_mbps: Option<(f64, f64)>,
    pub scenario: RuntimeScenario,
}

impl Population {
    /// Common shift: `a = 0.5`, `μ ∈ {1, 2, 4}`, 10–20 Mb/s.
    pub fn equal_shift(scenario: RuntimeScenario) -> Self {
        Self { rate_set: vec![1.0, 2.0, 4.0], shift: ShiftRule::Fixed(0.5), channel_mbps: Some((10.0, 20.0)), scenario }
    }

    /// Shift tied to rate: `μ ∈ {1, 3, 9}`, `a = 1/μ`, 10–20 Mb/s.
    pub fn inverse_shift(scenario: RuntimeScenario) -> Self {
        Self {
            rate_set: vec![1.0, 3.0, 9.0],
            shift: ShiftRule::InverseRate,
            channel_mbps: Some((10.0, 20.0)),
            scenario,
        }
    }

    pub fn draw(&self, n: usize, seed: u64) -> Result<Vec<HelperProfile>> {
        if self.rate_set.is_empty() {
            return Err(WorkloadError::Config("rate set is empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        (0..n)
            .map(|id| {
                let rate = *self.rate_set.choose(&mut rng).expect("non-empty");
                let shift = match self.shift {
                    ShiftRule::Fixed(a) => a,
                    ShiftRule::InverseRate => 1.0 / rate,
                };
                let channel = match self.channel_mbps {
                    None => ChannelModel::Instant,
                    Some((lo, hi)) => {
                        let mean = if hi > lo { rng.random_range(lo..hi) } else { lo };
                        ChannelModel::poisson(mean * MBPS)
                    }
                };
                HelperProfile::new(id, shift, rate, self.scenario, channel)
            })
            .collect()
    }
}

/// Runtimes for one helper: drawn from its profile or given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RuntimeSource {
    Sampled,
    /// Explicit per-packet runtimes in compute order; the last value repeats
    /// once the list is exhausted.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelperSpec {
    pub profile: HelperProfile,
    pub runtimes: RuntimeSource,
    /// Fault injection: the helper never finishes its `k+1`-th packet.
    pub stall_after: Option<usize>,
}

impl HelperSpec {
    pub fn sampled(profile: HelperProfile) -> Self {
        Self { profile, runtimes: RuntimeSource::Sampled, stall_after: None }
    }
}

/// Channel rates drawn for one packet: its uplink transfer and the downlink
/// used by both its receipt ACK and its result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDraw {
    pub up_bps: f64,
    pub down_bps: f64,
}

impl LinkDraw {
    pub fn data_delay(&self, sizes: &PacketSizes) -> f64 {
        sizes.data_bits / self.up_bps
    }

    pub fn ack_delay(&self, sizes: &PacketSizes) -> f64 {
        sizes.ack_bits / self.down_bps
    }

    pub fn result_delay(&self, sizes: &PacketSizes) -> f64 {
        sizes.result_bits / self.down_bps
    }
}

#[derive(Debug, Clone)]
struct HelperTape {
    profile: HelperProfile,
    source: RuntimeSource,
    stall_after: Option<usize>,
    runtime_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
    runtimes: Vec<f64>,
    links: Vec<LinkDraw>,
}

/// Pre-drawn, lazily extended runtime and channel sequences per helper.
///
/// Two `Tapes` built from the same specs and seed yield identical values, so
/// schedulers compared under one seed see the same `β_{n,i}` for the `i`-th
/// packet computed at helper `n` and the same link rates for the `i`-th
/// packet sent to it.
#[derive(Debug, Clone)]
pub struct Tapes {
    helpers: Vec<HelperTape>,
}

impl Tapes {
    pub fn new(specs: &[HelperSpec], seed: u64) -> Self {
        let helpers = specs
            .iter()
            .enumerate()
            .map(|(n, spec)| {
                let mut runtime_rng = ChaCha8Rng::seed_from_u64(seed);
                runtime_rng.set_stream(2 * n as u64);
                let mut channel_rng = ChaCha8Rng::seed_from_u64(seed);
                channel_rng.set_stream(2 * n as u64 + 1);
                HelperTape {
                    profile: spec.profile.clone(),
                    source: spec.runtimes.clone(),
                    stall_after: spec.stall_after,
                    runtime_rng,
                    channel_rng,
                    runtimes: Vec::new(),
                    links: Vec::new(),
                }
            })
            .collect();
        Self { helpers }
    }

    pub fn len(&self) -> usize {
        self.helpers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.helpers.is_empty()
    }

    /// Runtime of the `k`-th (0-based) packet computed by helper `n`.
    pub fn runtime(&mut self, n: usize, k: usize) -> f64 {
        let h = &mut self.helpers[n];
        if h.stall_after.is_some_and(|s| k >= s) {
            return f64::INFINITY;
        }
        match &h.source {
            RuntimeSource::Explicit(v) => match v.get(k).or(v.last()) {
                Some(&b) => b,
                None => f64::INFINITY,
            },
            RuntimeSource::Sampled => {
                while h.runtimes.len() <= k {
                    let b = sample_runtime(&mut h.profile, &mut h.runtime_rng);
                    h.runtimes.push(b);
                }
                h.runtimes[k]
            }
        }
    }

    /// Link rates for the `k`-th (0-based) packet sent to helper `n`.
    pub fn link(&mut self, n: usize, k: usize) -> LinkDraw {
        let h = &mut self.helpers[n];
        while h.links.len() <= k {
            let up_bps = h.profile.channel.sample_rate(&mut h.channel_rng, true);
            let down_bps = h.profile.channel.sample_rate(&mut h.channel_rng, false);
            h.links.push(LinkDraw { up_bps, down_bps });
        }
        h.links[k]
    }

    /// Mean runtime per packet at helper `n`, as an oracle with a-priori
    /// knowledge of the helper would use it: `a + 1/μ` when every packet is
    /// an independent draw, the drawn constant when it never changes.
    pub fn packet_mean(&mut self, n: usize) -> f64 {
        let h = &self.helpers[n];
        match (&h.source, h.profile.scenario) {
            (RuntimeSource::Explicit(v), _) if !v.is_empty() => v.iter().sum::<f64>() / v.len() as f64,
            (_, RuntimeScenario::FixedPerHelper) => self.runtime(n, 0),
            _ => h.profile.mean_runtime(),
        }
    }

    pub fn profile(&self, n: usize) -> &HelperProfile {
        &self.helpers[n].profile
    }
}
