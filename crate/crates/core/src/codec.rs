//! LT (Fountain) coding of matrix rows and peeling decode of the computed
//! inner products.
//!
//! A coded packet is the unit-coefficient sum of a random subset of rows of
//! `A`. A helper returns `payload · x`, which equals the sum of the `y`
//! components named by the packet's sources, so the collector can peel the
//! returned scalars back into `y = A·x` without touching `A` again.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("structural input error: {0}")]
    Structure(String),
    #[error("invalid soliton parameters: {0}")]
    Config(String),
    #[error("inconsistent coded equation: residual {0} with no unknowns left")]
    Inconsistent(String),
    #[error("decoder is not complete ({recovered} of {total} components recovered)")]
    Incomplete { recovered: usize, total: usize },
}

/// Element type of the task. Integer mode gives exact oracles, real mode is
/// what a deployment would use.
pub trait Scalar:
    Copy + PartialEq + Debug + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + 'static
{
    const ZERO: Self;
    /// Whether arithmetic is exact, enabling consistency checks in the decoder.
    const EXACT: bool;
}

impl Scalar for i64 {
    const ZERO: Self = 0;
    const EXACT: bool = true;
}

impl Scalar for i128 {
    const ZERO: Self = 0;
    const EXACT: bool = true;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const EXACT: bool = false;
}

/// The collector's task: `rows` of `A` and the vector `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTask<S> {
    rows: Vec<Vec<S>>,
    x: Vec<S>,
}

impl<S: Scalar> SourceTask<S> {
    pub fn new(rows: Vec<Vec<S>>, x: Vec<S>) -> Result<Self, CodecError> {
        if rows.is_empty() {
            return Err(CodecError::Structure("task has no rows".into()));
        }
        if x.is_empty() {
            return Err(CodecError::Structure("x is empty".into()));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != x.len()) {
            return Err(CodecError::Structure(format!("row {i} has width {} but x has width {}", row.len(), x.len())));
        }
        Ok(Self { rows, x })
    }

    /// Number of rows, `R`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn x(&self) -> &[S] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.rows[i]
    }

    /// Direct `A·x`, used as the reference the decoder is checked against.
    pub fn multiply(&self) -> Vec<S> {
        self.rows.iter().map(|r| dot(r, &self.x)).collect()
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::ZERO, |acc, (&p, &q)| acc + p * q)
}

/// One uncoded row of `A`, in task order.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePacket<S> {
    pub index: usize,
    pub row: Vec<S>,
}

pub fn packetize<S: Scalar>(task: &SourceTask<S>) -> Vec<SourcePacket<S>> {
    task.rows.iter().enumerate().map(|(index, row)| SourcePacket { index, row: row.clone() }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub c: f64,
    pub delta: f64,
}

impl Default for SolitonParams {
    fn default() -> Self {
        Self { c: 0.1, delta: 0.5 }
    }
}

/// Robust soliton distribution over degrees `1..=r`.
#[derive(Debug, Clone)]
pub struct RobustSoliton {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl RobustSoliton {
    pub fn new(r: usize, params: SolitonParams) -> Result<Self, CodecError> {
        let SolitonParams { c, delta } = params;
        if r == 0 {
            return Err(CodecError::Config("R must be at least 1".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(CodecError::Config(format!("c must be positive, got {c}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(CodecError::Config(format!("delta must lie in (0,1), got {delta}")));
        }
        let rf = r as f64;
        // index 0 is degree 1
        let mut weights = vec![0.0; r];
        weights[0] = 1.0 / rf;
        for d in 2..=r {
            weights[d - 1] = 1.0 / (d as f64 * (d as f64 - 1.0));
        }
        let spike = c * (rf / delta).ln() * rf.sqrt();
        let pivot = ((rf / spike).floor() as usize).clamp(1, r);
        for d in 1..pivot {
            weights[d - 1] += spike / (rf * d as f64);
        }
        weights[pivot - 1] += (spike * (spike / delta).ln() / rf).max(0.0);

        let total: f64 = weights.iter().sum();
        let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self { pmf, cdf })
    }

    /// Probability of degree `d` (zero outside `1..=R`).
    pub fn pmf(&self, d: usize) -> f64 {
        if d == 0 {
            return 0.0;
        }
        self.pmf.get(d - 1).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> usize {
        self.pmf.len()
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }

    pub fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> usize {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.cdf.len() - 1) + 1
    }
}

pub fn sample_degree<G: Rng + ?Sized>(rng: &mut G, r: usize, params: SolitonParams) -> Result<usize, CodecError> {
    Ok(RobustSoliton::new(r, params)?.sample(rng))
}

/// Header of a coded packet: which rows were summed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedHeader {
    pub coded_id: u64,
    pub sources: Vec<usize>,
}

impl CodedHeader {
    pub fn degree(&self) -> usize {
        self.sources.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodedPacket<S> {
    pub header: CodedHeader,
    pub payload: Vec<S>,
}

impl<S> CodedPacket<S> {
    pub fn coded_id(&self) -> u64 {
        self.header.coded_id
    }

    pub fn degree(&self) -> usize {
        self.header.sources.len()
    }

    pub fn sources(&self) -> &[usize] {
        &self.header.sources
    }
}

/// Rateless LT encoder. Coded ids start at 1 and increase by one per packet.
#[derive(Debug, Clone)]
pub struct LtEncoder {
    r: usize,
    dist: RobustSoliton,
    next_id: u64,
}

impl LtEncoder {
    pub fn new(r: usize, params: SolitonParams) -> Result<Self, CodecError> {
        Ok(Self { r, dist: RobustSoliton::new(r, params)?, next_id: 1 })
    }

    pub fn distribution(&self) -> &RobustSoliton {
        &self.dist
    }

    /// Draws the next header without building a payload; the simulator uses
    /// this when only the decoding structure matters.
    pub fn next_header<G: Rng + ?Sized>(&mut self, rng: &mut G) -> CodedHeader {
        let degree = self.dist.sample(rng);
        self.header_with_degree(rng, degree)
    }

    fn header_with_degree<G: Rng + ?Sized>(&mut self, rng: &mut G, degree: usize) -> CodedHeader {
        let mut sources = index::sample(rng, self.r, degree.min(self.r)).into_vec();
        sources.sort_unstable();
        let coded_id = self.next_id;
        self.next_id += 1;
        CodedHeader { coded_id, sources }
    }

    pub fn encode_next<G: Rng + ?Sized, S: Scalar>(
        &mut self,
        rng: &mut G,
        task: &SourceTask<S>,
    ) -> Result<CodedPacket<S>, CodecError> {
        self.check_task(task)?;
        let header = self.next_header(rng);
        Ok(build_packet(task, header))
    }

    /// Like [`encode_next`](Self::encode_next) with the degree fixed by the caller.
    pub fn encode_with_degree<G: Rng + ?Sized, S: Scalar>(
        &mut self,
        rng: &mut G,
        task: &SourceTask<S>,
        degree: usize,
    ) -> Result<CodedPacket<S>, CodecError> {
        self.check_task(task)?;
        if degree == 0 || degree > self.r {
            return Err(CodecError::Structure(format!("degree {degree} outside 1..={}", self.r)));
        }
        let header = self.header_with_degree(rng, degree);
        Ok(build_packet(task, header))
    }

    fn check_task<S: Scalar>(&self, task: &SourceTask<S>) -> Result<(), CodecError> {
        if task.len() != self.r {
            return Err(CodecError::Structure(format!(
                "encoder built for R={} but task has {} rows",
                self.r,
                task.len()
            )));
        }
        Ok(())
    }
}

/// Sums the rows named by `header` into a coded packet.
pub fn build_packet<S: Scalar>(task: &SourceTask<S>, header: CodedHeader) -> CodedPacket<S> {
    let mut payload = vec![S::ZERO; task.x.len()];
    for &s in &header.sources {
        for (p, &v) in payload.iter_mut().zip(&task.rows[s]) {
            *p = *p + v;
        }
    }
    CodedPacket { header, payload }
}

/// Helper-side work: `payload · x`.
pub fn compute_product<S: Scalar>(pkt: &CodedPacket<S>, x: &[S]) -> Result<S, CodecError> {
    if pkt.payload.len() != x.len() {
        return Err(CodecError::Structure(format!(
            "payload width {} does not match x width {}",
            pkt.payload.len(),
            x.len()
        )));
    }
    Ok(dot(&pkt.payload, x))
}

/// A helper's returned scalar for one coded packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputedResult<S> {
    pub coded_id: u64,
    pub value: S,
    pub helper_id: usize,
    /// 1-based index of the packet among those sent to `helper_id`.
    pub index: usize,
}

#[derive(Debug, Clone)]
struct Equation<S> {
    unknown: Vec<usize>,
    value: S,
    live: bool,
}

/// Peeling (belief-propagation) decoder over unit-coefficient equations.
#[derive(Debug, Clone)]
pub struct PeelingDecoder<S> {
    recovered: Vec<Option<S>>,
    n_recovered: usize,
    received: usize,
    equations: Vec<Equation<S>>,
    // equation ids still referencing each unknown component
    adjacency: Vec<Vec<usize>>,
    k_actual: Option<usize>,
}

impl<S: Scalar> PeelingDecoder<S> {
    pub fn new(r: usize) -> Self {
        Self {
            recovered: vec![None; r],
            n_recovered: 0,
            received: 0,
            equations: Vec::new(),
            adjacency: vec![Vec::new(); r],
            k_actual: None,
        }
    }

    pub fn len(&self) -> usize {
        self.recovered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recovered.is_empty()
    }

    pub fn received(&self) -> usize {
        self.received
    }

    pub fn recovered_count(&self) -> usize {
        self.n_recovered
    }

    pub fn recovered(&self, i: usize) -> Option<S> {
        self.recovered.get(i).copied().flatten()
    }

    /// Results consumed beyond `R` at the moment decoding completed.
    pub fn k_actual(&self) -> Option<usize> {
        self.k_actual
    }

    pub fn decode_complete(&self) -> bool {
        !self.recovered.is_empty() && self.n_recovered == self.recovered.len()
    }

    pub fn decoded_y(&self) -> Result<Vec<S>, CodecError> {
        if !self.decode_complete() {
            return Err(CodecError::Incomplete { recovered: self.n_recovered, total: self.recovered.len() });
        }
        Ok(self.recovered.iter().map(|v| v.expect("complete")).collect())
    }

    /// Adds one computed equation `Σ_{s ∈ sources} y_s = value` and returns the
    /// components it (transitively) recovered.
    pub fn add(&mut self, sources: &[usize], value: S) -> Result<Vec<usize>, CodecError> {
        if sources.is_empty() {
            return Err(CodecError::Structure("equation has no sources".into()));
        }
        let r = self.recovered.len();
        if let Some(&bad) = sources.iter().find(|&&s| s >= r) {
            return Err(CodecError::Structure(format!("source {bad} outside 0..{r}")));
        }
        self.received += 1;

        let mut residual = value;
        let mut unknown = Vec::with_capacity(sources.len());
        for &s in sources {
            match self.recovered[s] {
                Some(y) => residual = residual - y,
                None => unknown.push(s),
            }
        }
        let mut newly = Vec::new();
        match unknown.len() {
            0 => self.check_residual(residual)?,
            1 => self.resolve(unknown[0], residual, &mut newly)?,
            _ => {
                let id = self.equations.len();
                for &s in &unknown {
                    self.adjacency[s].push(id);
                }
                self.equations.push(Equation { unknown, value: residual, live: true });
            }
        }
        if self.k_actual.is_none() && self.decode_complete() {
            self.k_actual = Some(self.received.saturating_sub(r));
        }
        Ok(newly)
    }

    fn check_residual(&self, residual: S) -> Result<(), CodecError> {
        if S::EXACT && residual != S::ZERO {
            return Err(CodecError::Inconsistent(format!("{residual:?}")));
        }
        Ok(())
    }

    fn resolve(&mut self, first: usize, value: S, newly: &mut Vec<usize>) -> Result<(), CodecError> {
        let mut ripple = vec![(first, value)];
        while let Some((s, v)) = ripple.pop() {
            if let Some(existing) = self.recovered[s] {
                self.check_residual(v - existing)?;
                continue;
            }
            self.recovered[s] = Some(v);
            self.n_recovered += 1;
            newly.push(s);
            for id in std::mem::take(&mut self.adjacency[s]) {
                let eq = &mut self.equations[id];
                if !eq.live {
                    continue;
                }
                if let Some(pos) = eq.unknown.iter().position(|&u| u == s) {
                    eq.unknown.swap_remove(pos);
                    eq.value = eq.value - v;
                }
                if eq.unknown.len() == 1 {
                    eq.live = false;
                    ripple.push((eq.unknown[0], eq.value));
                }
            }
        }
        Ok(())
    }
}

pub fn decoder_add<S: Scalar>(
    state: &mut PeelingDecoder<S>,
    sources: &[usize],
    value: S,
) -> Result<Vec<usize>, CodecError> {
    state.add(sources, value)
}

pub fn decode_complete<S: Scalar>(state: &PeelingDecoder<S>) -> bool {
    state.decode_complete()
}

pub fn decoded_y<S: Scalar>(state: &PeelingDecoder<S>) -> Result<Vec<S>, CodecError> {
    state.decoded_y()
}

/// Feeds freshly coded headers into a structural decoder until it completes
/// and returns the overhead `K_actual`.
pub fn measure_overhead<G: Rng + ?Sized>(rng: &mut G, r: usize, params: SolitonParams) -> Result<usize, CodecError> {
    let mut enc = LtEncoder::new(r, params)?;
    let mut dec = PeelingDecoder::<f64>::new(r);
    while !dec.decode_complete() {
        let h = enc.next_header(rng);
        dec.add(&h.sources, 0.0)?;
    }
    Ok(dec.k_actual().unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn int_task(r: usize, seed: u64) -> SourceTask<i64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..r).map(|_| (0..r).map(|_| rng.random_range(-9..=9)).collect()).collect();
        let x = (0..r).map(|_| rng.random_range(-9..=9)).collect();
        SourceTask::new(rows, x).unwrap()
    }

    #[test]
    fn packetize_keeps_row_order() {
        let task = int_task(6, 1);
        let pkts = packetize(&task);
        assert_eq!(pkts.len(), 6);
        assert_eq!(pkts[3].row, task.row(3));
        assert_eq!(pkts[3].index, 3);

        let one = SourceTask::new(vec![vec![5i64]], vec![1]).unwrap();
        assert_eq!(packetize(&one)[0].row, vec![5]);
    }

    #[test]
    fn packetize_large_task() {
        let r = 2000;
        let task = SourceTask::new(vec![vec![0.5f64; r]; r], vec![1.0; r]).unwrap();
        let pkts = packetize(&task);
        assert_eq!(pkts.len(), r);
        assert!(pkts.iter().all(|p| p.row.len() == r));
    }

    #[test]
    fn ragged_task_is_rejected() {
        let err = SourceTask::new(vec![vec![1i64, 2], vec![3]], vec![1, 1]).unwrap_err();
        assert!(matches!(err, CodecError::Structure(_)));
    }

    #[test]
    fn invalid_soliton_params() {
        for p in [
            SolitonParams { c: 0.0, delta: 0.5 },
            SolitonParams { c: 0.1, delta: 0.0 },
            SolitonParams { c: 0.1, delta: 1.0 },
        ] {
            assert!(matches!(RobustSoliton::new(10, p), Err(CodecError::Config(_))));
        }
        assert!(RobustSoliton::new(0, SolitonParams::default()).is_err());
    }

    #[test]
    fn single_row_always_degree_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(sample_degree(&mut rng, 1, SolitonParams::default()).unwrap(), 1);
        }
    }

    #[test]
    fn degree_sequence_is_deterministic() {
        let dist = RobustSoliton::new(100, SolitonParams::default()).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..200).map(|_| dist.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn empirical_degrees_match_pmf() {
        let r = 100;
        let dist = RobustSoliton::new(r, SolitonParams::default()).unwrap();
        // independent oracle: analytic weights before normalization
        let spike = 0.1 * (r as f64 / 0.5).ln() * (r as f64).sqrt();
        let pivot = (r as f64 / spike).floor() as usize;
        let raw = |d: usize| {
            let ideal = if d == 1 { 1.0 / r as f64 } else { 1.0 / (d * (d - 1)) as f64 };
            let robust = if d < pivot {
                spike / (r as f64 * d as f64)
            } else if d == pivot {
                spike * (spike / 0.5).ln() / r as f64
            } else {
                0.0
            };
            ideal + robust
        };
        let z: f64 = (1..=r).map(raw).sum();
        for d in 1..=r {
            assert!((dist.pmf(d) - raw(d) / z).abs() < 1e-12);
        }

        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = vec![0usize; r + 1];
        for _ in 0..n {
            counts[dist.sample(&mut rng)] += 1;
        }
        let tv: f64 = (1..=r).map(|d| (counts[d] as f64 / n as f64 - raw(d) / z).abs()).sum::<f64>() / 2.0;
        assert!(tv <= 0.01, "total variation {tv}");
    }

    #[test]
    fn forced_degree_one_payload_is_the_row() {
        let task = int_task(8, 5);
        let mut enc = LtEncoder::new(8, SolitonParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pkt = enc.encode_with_degree(&mut rng, &task, 1).unwrap();
        let k = pkt.sources()[0];
        assert_eq!(pkt.payload, task.row(k));
        assert_eq!(compute_product(&pkt, task.x()).unwrap(), task.multiply()[k]);
    }

    #[test]
    fn payload_sums_rows() {
        let task = SourceTask::new(vec![vec![1i64, 0], vec![0, 1]], vec![3, 4]).unwrap();
        let pkt = build_packet(&task, CodedHeader { coded_id: 1, sources: vec![0, 1] });
        assert_eq!(pkt.payload, vec![1, 1]);
        assert_eq!(compute_product(&pkt, task.x()).unwrap(), 7);
    }

    #[test]
    fn product_width_mismatch() {
        let pkt = CodedPacket { header: CodedHeader { coded_id: 1, sources: vec![0] }, payload: vec![1i64, 2] };
        assert!(matches!(compute_product(&pkt, &[1]), Err(CodecError::Structure(_))));
    }

    #[test]
    fn coded_ids_unique_and_increasing() {
        let mut enc = LtEncoder::new(50, SolitonParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut last = 0;
        for _ in 0..10_000 {
            let h = enc.next_header(&mut rng);
            assert!(h.coded_id > last);
            assert!(h.degree() >= 1 && h.degree() <= 50);
            let mut s = h.sources.clone();
            s.dedup();
            assert_eq!(s.len(), h.degree());
            last = h.coded_id;
        }
    }

    #[test]
    fn product_equals_sum_of_y() {
        let task = int_task(20, 6);
        let y = task.multiply();
        let mut enc = LtEncoder::new(20, SolitonParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let pkt = enc.encode_next(&mut rng, &task).unwrap();
            let expect: i64 = pkt.sources().iter().map(|&s| y[s]).sum();
            assert_eq!(compute_product(&pkt, task.x()).unwrap(), expect);
        }
    }

    #[test]
    fn hand_peel_two_rows() {
        let (y1, y2) = (5i64, -3i64);
        let mut dec = PeelingDecoder::new(2);
        assert_eq!(dec.add(&[0], y1).unwrap(), vec![0]);
        assert_eq!(dec.add(&[0, 1], y1 + y2).unwrap(), vec![1]);
        assert_eq!(dec.recovered(1), Some(y2));
        assert!(dec.decode_complete());
        assert_eq!(dec.k_actual(), Some(0));
    }

    #[test]
    fn duplicate_equation_only_counts() {
        let mut dec = PeelingDecoder::new(3);
        dec.add(&[2], 4i64).unwrap();
        assert!(dec.add(&[2], 4).unwrap().is_empty());
        assert_eq!(dec.received(), 2);
        assert_eq!(dec.recovered_count(), 1);
    }

    #[test]
    fn degree_one_cover_has_no_overhead() {
        let mut dec = PeelingDecoder::new(4);
        for i in 0..4 {
            dec.add(&[i], i as i64 * 10).unwrap();
        }
        assert!(dec.decode_complete());
        assert_eq!(dec.k_actual(), Some(0));
        assert_eq!(dec.decoded_y().unwrap(), vec![0, 10, 20, 30]);
    }

    #[test]
    fn inconsistency_is_reported() {
        let mut dec = PeelingDecoder::new(2);
        dec.add(&[0], 1i64).unwrap();
        dec.add(&[1], 2).unwrap();
        assert!(matches!(dec.add(&[0, 1], 4), Err(CodecError::Inconsistent(_))));
        // real mode tolerates rounding residue
        let mut real = PeelingDecoder::new(1);
        real.add(&[0], 1.0f64).unwrap();
        real.add(&[0], 1.0 + 1e-15).unwrap();
    }

    #[test]
    fn empty_decoder_is_incomplete() {
        let dec = PeelingDecoder::<i64>::new(3);
        assert!(!decode_complete(&dec));
        assert!(matches!(decoded_y(&dec), Err(CodecError::Incomplete { .. })));
        let mut dec = dec;
        assert!(decoder_add(&mut dec, &[], 0).is_err());
    }

    #[test]
    fn six_by_six_decodes_exactly() {
        let task = int_task(6, 77);
        let mut enc = LtEncoder::new(6, SolitonParams::default()).unwrap();
        let mut dec = PeelingDecoder::new(6);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        while !dec.decode_complete() {
            let pkt = enc.encode_next(&mut rng, &task).unwrap();
            let v = compute_product(&pkt, task.x()).unwrap();
            dec.add(pkt.sources(), v).unwrap();
        }
        assert_eq!(dec.decoded_y().unwrap(), task.multiply());
    }

    #[test]
    fn real_mode_within_tolerance() {
        let r = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rows: Vec<Vec<f64>> = (0..r).map(|_| (0..r).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let x: Vec<f64> = (0..r).map(|_| rng.random_range(-1.0..1.0)).collect();
        let task = SourceTask::new(rows, x).unwrap();
        let mut enc = LtEncoder::new(r, SolitonParams::default()).unwrap();
        let mut dec = PeelingDecoder::new(r);
        while !dec.decode_complete() {
            let pkt = enc.encode_next(&mut rng, &task).unwrap();
            let v = compute_product(&pkt, task.x()).unwrap();
            dec.add(pkt.sources(), v).unwrap();
        }
        let xnorm = task.x().iter().map(|v| v * v).sum::<f64>().sqrt();
        for (i, (got, want)) in dec.decoded_y().unwrap().iter().zip(task.multiply()).enumerate() {
            let rnorm = task.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((got - want).abs() <= 1e-9 * rnorm * xnorm, "row {i}: {got} vs {want}");
        }
    }
}
