//! Seeded replicate sweeps and their CSV tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use c3p_core::workload::HelperSpec;
use c3p_core::{baselines, run_kind, theory, RunSpec, SchedulerKind, SimConfig};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{ExperimentConfig, Point};
use crate::CliError;

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    #[serde(rename = "R")]
    pub rows: usize,
    #[serde(rename = "N")]
    pub helpers: usize,
    pub scenario: &'static str,
    pub scheduler: &'static str,
    pub seed: u64,
    #[serde(rename = "T_total")]
    pub t_total: f64,
    #[serde(rename = "K_actual")]
    pub k_actual: usize,
    pub mean_efficiency: f64,
    pub min_efficiency: f64,
    pub waste: usize,
    pub wall_ms: Option<f64>,
}

/// One row of `theory.csv`: closed-form predictions for the population a
/// replicate drew.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryRow {
    #[serde(rename = "R")]
    pub rows: usize,
    #[serde(rename = "N")]
    pub helpers: usize,
    pub scenario: &'static str,
    pub seed: u64,
    #[serde(rename = "T_c3p_pred")]
    pub t_c3p: f64,
    #[serde(rename = "T_static_pred")]
    pub t_static: f64,
    pub gamma_theory_mean: f64,
    pub expected_tu_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    #[serde(rename = "R")]
    pub rows: usize,
    #[serde(rename = "N")]
    pub helpers: usize,
    pub scenario: &'static str,
    pub scheduler: &'static str,
    pub replicates: usize,
    #[serde(rename = "T_mean")]
    pub t_mean: f64,
    #[serde(rename = "T_ci95")]
    pub t_ci95: f64,
    #[serde(rename = "K_actual_mean")]
    pub k_actual_mean: f64,
    pub mean_efficiency_mean: f64,
    pub mean_efficiency_ci95: f64,
    pub min_efficiency_mean: f64,
    pub waste_mean: f64,
}

/// Per-seed gain of c3p over a baseline, `(T_base − T_c3p)/T_base` in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementRow {
    #[serde(rename = "R")]
    pub rows: usize,
    #[serde(rename = "N")]
    pub helpers: usize,
    pub scenario: &'static str,
    pub baseline: &'static str,
    pub replicates: usize,
    pub improvement_pct_mean: f64,
    pub improvement_pct_ci95: f64,
    pub c3p_win_rate: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub runs: Vec<RunRow>,
    pub theory: Vec<TheoryRow>,
    pub aggregate: Vec<AggregateRow>,
    pub improvement: Vec<ImprovementRow>,
}

impl ExperimentOutput {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        write_csv(&dir.join("runs.csv"), &self.runs)?;
        write_csv(&dir.join("theory.csv"), &self.theory)?;
        write_csv(&dir.join("aggregate.csv"), &self.aggregate)?;
        write_csv(&dir.join("improvement.csv"), &self.improvement)?;
        Ok(())
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Run spec for one replicate of one sweep point.
pub fn replicate_spec(cfg: &ExperimentConfig, point: Point, seed: u64) -> Result<RunSpec, CliError> {
    let profiles =
        cfg.population(point.scenario).draw(point.helpers, seed).map_err(|e| CliError::Config(e.to_string()))?;
    let helpers = profiles.into_iter().map(HelperSpec::sampled).collect();
    let mut sim = SimConfig::new(helpers, point.rows, cfg.sizes.sizes(point.rows)?, seed);
    sim.event_cap = cfg.event_cap;
    Ok(RunSpec { sim, alpha: cfg.alpha, estimator: cfg.estimator, stop: cfg.stop, k_fraction: cfg.k_fraction })
}

fn run_replicate(cfg: &ExperimentConfig, point: Point, seed: u64) -> Result<(Vec<RunRow>, TheoryRow), CliError> {
    let spec = replicate_spec(cfg, point, seed)?;
    let mut rows = Vec::with_capacity(cfg.schedulers.len());
    for &kind in &cfg.schedulers {
        let t0 = Instant::now();
        let out = run_kind(kind, &spec)?;
        let wall = t0.elapsed().as_secs_f64() * 1e3;
        let m = &out.metrics;
        rows.push(RunRow {
            rows: point.rows,
            helpers: point.helpers,
            scenario: point.scenario.label(),
            scheduler: kind.label(),
            seed,
            t_total: m.t_total,
            k_actual: m.k_actual,
            mean_efficiency: m.mean_efficiency(),
            min_efficiency: m.min_efficiency(),
            waste: m.waste,
            wall_ms: cfg.record_wall_time.then_some(wall),
        });
    }

    let profiles: Vec<_> = spec.sim.helpers.iter().map(|h| h.profile.clone()).collect();
    let pred = theory::predict(&profiles, &spec.sim.sizes, point.rows, spec.k())?;
    // Fixed-per-helper runtimes are known once drawn; use them for the delay predictions.
    let means = baselines::oracle_means(&mut spec.tapes());
    let th = TheoryRow {
        rows: point.rows,
        helpers: point.helpers,
        scenario: point.scenario.label(),
        seed,
        t_c3p: theory::predict_t_c3p(&means, point.rows, spec.k())?,
        t_static: theory::predict_t_static(&means, point.rows)?,
        gamma_theory_mean: mean(&pred.gamma),
        expected_tu_mean: mean(&pred.expected_tu),
    };
    Ok((rows, th))
}

/// Runs every sweep point and replicate. Replicates run on `workers`
/// threads (rayon's default when `None`); rows come out in sweep and
/// replicate order regardless.
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentOutput, CliError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;

    let mut out = ExperimentOutput::default();
    for point in cfg.points() {
        let reps: Vec<_> = pool.install(|| {
            (0..cfg.replicates as u64)
                .into_par_iter()
                .map(|i| run_replicate(cfg, point, cfg.base_seed.wrapping_add(i)))
                .collect::<Result<Vec<_>, _>>()
        })?;
        for (rows, th) in reps {
            out.runs.extend(rows);
            out.theory.push(th);
        }
    }
    out.aggregate = aggregate(&out.runs);
    out.improvement = improvement(&out.runs);
    Ok(out)
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Half-width of the two-sided 95% Student-t interval for the mean; 0 for fewer than two samples.
pub fn ci95(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("df ≥ 1").inverse_cdf(0.975);
    t * (var / n as f64).sqrt()
}

type Key = (usize, usize, &'static str);

/// Runs grouped by sweep point, in order of first appearance.
fn by_point(runs: &[RunRow]) -> Vec<(Key, Vec<&RunRow>)> {
    let mut groups: Vec<(Key, Vec<&RunRow>)> = Vec::new();
    for r in runs {
        let key = (r.rows, r.helpers, r.scenario);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
}

pub fn aggregate(runs: &[RunRow]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for ((rows, helpers, scenario), rs) in by_point(runs) {
        for kind in SchedulerKind::ALL {
            let sel: Vec<&RunRow> = rs.iter().copied().filter(|r| r.scheduler == kind.label()).collect();
            if sel.is_empty() {
                continue;
            }
            let col = |f: fn(&RunRow) -> f64| sel.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let t = col(|r| r.t_total);
            let eff = col(|r| r.mean_efficiency);
            out.push(AggregateRow {
                rows,
                helpers,
                scenario,
                scheduler: kind.label(),
                replicates: sel.len(),
                t_mean: mean(&t),
                t_ci95: ci95(&t),
                k_actual_mean: mean(&col(|r| r.k_actual as f64)),
                mean_efficiency_mean: mean(&eff),
                mean_efficiency_ci95: ci95(&eff),
                min_efficiency_mean: mean(&col(|r| r.min_efficiency)),
                waste_mean: mean(&col(|r| r.waste as f64)),
            });
        }
    }
    out
}

pub fn improvement(runs: &[RunRow]) -> Vec<ImprovementRow> {
    let mut out = Vec::new();
    for ((rows, helpers, scenario), rs) in by_point(runs) {
        let c3p: BTreeMap<u64, f64> =
            rs.iter().filter(|r| r.scheduler == SchedulerKind::C3p.label()).map(|r| (r.seed, r.t_total)).collect();
        if c3p.is_empty() {
            continue;
        }
        for kind in SchedulerKind::ALL.into_iter().filter(|k| *k != SchedulerKind::C3p) {
            let pairs: Vec<(f64, f64)> = rs
                .iter()
                .filter(|r| r.scheduler == kind.label())
                .filter_map(|r| c3p.get(&r.seed).map(|&c| (r.t_total, c)))
                .collect();
            if pairs.is_empty() {
                continue;
            }
            let gains: Vec<f64> = pairs.iter().map(|(b, c)| (b - c) / b * 100.0).collect();
            let wins = pairs.iter().filter(|(b, c)| c < b).count();
            out.push(ImprovementRow {
                rows,
                helpers,
                scenario,
                baseline: kind.label(),
                replicates: pairs.len(),
                improvement_pct_mean: mean(&gains),
                improvement_pct_ci95: ci95(&gains),
                c3p_win_rate: wins as f64 / pairs.len() as f64,
            });
        }
    }
    out
}
