//! Closed-form predictions and Monte-Carlo verifiers.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::workload::{HelperProfile, PacketSizes};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("invalid parameter: {0}")]
    Param(String),
}

type Result<T> = std::result::Result<T, TheoryError>;

fn rate_sum(means: &[f64]) -> Result<f64> {
    if means.is_empty() || means.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(TheoryError::Param(format!("mean runtimes must be positive: {means:?}")));
    }
    Ok(means.iter().map(|m| 1.0 / m).sum())
}

/// Completion time of the adaptive collector for large `R`:
/// `(R+K) / Σ 1/E[β_n]`.
pub fn predict_t_c3p(means: &[f64], r: usize, k: usize) -> Result<f64> {
    Ok((r + k) as f64 / rate_sum(means)?)
}

/// Packets completed per helper: `(R+K) / (E[β_n]·Σ 1/E[β_k])`.
pub fn predict_r_c3p(means: &[f64], r: usize, k: usize) -> Result<Vec<f64>> {
    let s = rate_sum(means)?;
    Ok(means.iter().map(|m| (r + k) as f64 / (m * s)).collect())
}

/// `R / Σ 1/E[β_n]`.
pub fn predict_t_static(means: &[f64], r: usize) -> Result<f64> {
    predict_t_c3p(means, r, 0)
}

fn check_params(mu: f64, a: f64, rtt: f64) {
    debug_assert!(mu > 0.0 && a >= 0.0 && rtt >= 0.0, "mu={mu} a={a} rtt={rtt}");
}

/// Expected per-packet idle time of a helper in the worst case.
pub fn expected_tu(mu: f64, a: f64, rtt: f64) -> f64 {
    check_params(mu, a, rtt);
    let e = std::f64::consts::E;
    if rtt < 1.0 / mu {
        (1.0 - (mu * rtt).exp()) / (e * mu) + rtt
    } else {
        1.0 / (e * mu)
    }
}

/// Worst-case efficiency `1 − E[Tu]/E[β]`, branch by branch.
pub fn efficiency_theoretical(mu: f64, a: f64, rtt: f64) -> f64 {
    check_params(mu, a, rtt);
    let e = std::f64::consts::E;
    let am = 1.0 + a * mu;
    if rtt < 1.0 / mu {
        (am - mu * rtt - 1.0 / e + (mu * rtt - 1.0).exp()) / am
    } else {
        (e * am - 1.0) / (e * am)
    }
}

/// Worst-case idle before a packet, given the previous runtime:
/// the shortfall of `β_prev` below the mean, capped by the round trip.
pub fn worst_case_tu(beta_prev: f64, mean: f64, rtt: f64) -> f64 {
    (mean - beta_prev).max(0.0).min(rtt)
}

/// Monte-Carlo mean of [`worst_case_tu`] over shifted-exponential runtimes.
pub fn expected_tu_mc<G: Rng + ?Sized>(mu: f64, a: f64, rtt: f64, samples: usize, rng: &mut G) -> f64 {
    let exp = Exp::new(mu).expect("positive rate");
    let mean = a + 1.0 / mu;
    let total: f64 = (0..samples).map(|_| worst_case_tu(a + exp.sample(rng), mean, rtt)).sum();
    total / samples as f64
}

/// Helper queueing delays `Tq_1..Tq_{L+1}` for runtimes `β_1..β_L` when
/// packets arrive every `mean` seconds: `Tq_1 = 0`,
/// `Tq_i = max(β_{i−1} − mean + Tq_{i−1}, 0)`.
pub fn tq_trace(betas: &[f64], mean: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(betas.len() + 1);
    let mut tq = 0.0;
    out.push(tq);
    for b in betas {
        tq = (b - mean + tq).max(0.0);
        out.push(tq);
    }
    out
}

/// Idle times `Tu_1..Tu_{L+1}`: `Tu_1 = 0`,
/// `Tu_i = min(max(max(0, mean − β_{i−1}) − Tq_{i−1}, 0), rtt)`.
pub fn tu_model(betas: &[f64], mean: f64, rtt: f64) -> Vec<f64> {
    let tq = tq_trace(betas, mean);
    let mut out = Vec::with_capacity(betas.len() + 1);
    out.push(0.0);
    for (i, b) in betas.iter().enumerate() {
        out.push(((mean - b).max(0.0) - tq[i]).max(0.0).min(rtt));
    }
    out
}

/// True iff every suffix of the prefix runs faster than the mean:
/// `Σ_{j=i+1−k}^{i} β_j < k·mean` for `k = 1..i`.
pub fn suffix_condition(prefix: &[f64], mean: f64) -> bool {
    let mut sum = 0.0;
    for (k, b) in prefix.iter().rev().enumerate() {
        sum += b;
        if sum >= (k + 1) as f64 * mean {
            return false;
        }
    }
    true
}

/// Monte-Carlo probability that [`suffix_condition`] holds on an `i`-prefix of
/// i.i.d. shifted-exponential runtimes.
pub fn pr_tu_positive_mc<G: Rng + ?Sized>(i: usize, mu: f64, a: f64, samples: usize, rng: &mut G) -> f64 {
    let exp = Exp::new(mu).expect("positive rate");
    let mean = a + 1.0 / mu;
    let mut prefix = vec![0.0; i];
    let mut hits = 0usize;
    for _ in 0..samples {
        for b in prefix.iter_mut() {
            *b = a + exp.sample(rng);
        }
        hits += suffix_condition(&prefix, mean) as usize;
    }
    hits as f64 / samples as f64
}

/// [`pr_tu_positive_mc`] for every `i = 1..=imax` over shared sample paths.
///
/// The event on the `i`-prefix is `β_i − mean + Tq_i < 0` with `Tq` from
/// [`tq_trace`], so one pass per path covers all prefix lengths.
pub fn pr_tu_positive_curve<G: Rng + ?Sized>(imax: usize, mu: f64, a: f64, samples: usize, rng: &mut G) -> Vec<f64> {
    let exp = Exp::new(mu).expect("positive rate");
    let mean = a + 1.0 / mu;
    let mut hits = vec![0usize; imax];
    for _ in 0..samples {
        let mut tq = 0.0f64;
        for h in hits.iter_mut() {
            let d = a + exp.sample(rng) - mean;
            if d + tq < 0.0 {
                *h += 1;
            }
            tq = (d + tq).max(0.0);
        }
    }
    hits.into_iter().map(|h| h as f64 / samples as f64).collect()
}

/// Per-helper predictions for one population.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryPrediction {
    pub t_static: f64,
    pub t_c3p: f64,
    pub r_c3p: Vec<f64>,
    pub expected_tu: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Predictions with each helper's round trip taken as its expected data
/// round trip under its channel model.
pub fn predict(profiles: &[HelperProfile], sizes: &PacketSizes, r: usize, k: usize) -> Result<TheoryPrediction> {
    let means: Vec<f64> = profiles.iter().map(HelperProfile::mean_runtime).collect();
    let rtts: Vec<f64> = profiles.iter().map(|p| p.expected_rtt_data(sizes)).collect();
    Ok(TheoryPrediction {
        t_static: predict_t_static(&means, r)?,
        t_c3p: predict_t_c3p(&means, r, k)?,
        r_c3p: predict_r_c3p(&means, r, k)?,
        expected_tu: profiles.iter().zip(&rtts).map(|(p, &t)| expected_tu(p.rate, p.shift, t)).collect(),
        gamma: profiles.iter().zip(&rtts).map(|(p, &t)| efficiency_theoretical(p.rate, p.shift, t)).collect(),
    })
}
