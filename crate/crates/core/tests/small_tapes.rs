mod common;

use c3p_core::baselines::{self, NonergodicOracle, RepetitionRr, UpfrontScheduler};
use c3p_core::engine::{self, TraceKind};
use c3p_core::{C3pParams, C3pScheduler, EstimatorMode, StopRule};
use common::*;

#[test]
fn per_row_speeds_uncoded_naive_split() {
    let cfg = explicit_config(&per_row_speeds(), 6);
    let out = engine::run(&cfg, &mut UpfrontScheduler::uncoded(&[2, 2, 2])).unwrap();
    assert_eq!(out.metrics.t_total, 20.0);
}

#[test]
fn per_row_speeds_coded_equal_split() {
    let cfg = explicit_config(&per_row_speeds(), 6);
    let out = engine::run(&cfg, &mut UpfrontScheduler::coded("static", &[3, 3, 3], 6)).unwrap();
    assert_eq!(out.metrics.t_total, 6.0);
    assert_eq!(out.metrics.r_n(), vec![3, 3, 0]);
}

#[test]
fn per_row_speeds_heterogeneity_aware_split() {
    let cfg = explicit_config(&per_row_speeds(), 6);
    let out = engine::run(&cfg, &mut UpfrontScheduler::coded("static", &[4, 2, 0], 6)).unwrap();
    assert_eq!(out.metrics.t_total, 4.0);
}

#[test]
fn per_row_speeds_static_allocation_from_means() {
    // 1/1 : 1/2 : 1/10 of 6 rows -> (4, 2, 0) after largest remainder
    let alloc = baselines::static_allocate(&[1.0, 2.0, 10.0], 6).unwrap();
    assert_eq!(alloc.r, vec![4, 2, 0]);
    let cfg = explicit_config(&per_row_speeds(), 6);
    let mut s = baselines::static_scheduler(&[1.0, 2.0, 10.0], 6, None).unwrap();
    assert_eq!(engine::run(&cfg, &mut s).unwrap().metrics.t_total, 4.0);
}

#[test]
fn per_row_speeds_oracle_matches_best_split() {
    let cfg = explicit_config(&per_row_speeds(), 6);
    let tapes = c3p_core::Tapes::new(&cfg.helpers, cfg.seed);
    let mut s = NonergodicOracle::new(tapes, cfg.sizes, StopRule::Count(6));
    let out = engine::run(&cfg, &mut s).unwrap();
    assert_eq!(out.metrics.t_total, 4.0);
}

fn c3p_on_irregular(mode: EstimatorMode) -> engine::RunOutput {
    let cfg = explicit_config(&irregular_tape(), 6);
    let params = C3pParams { alpha: 0.125, mode, stop: StopRule::Count(6), sizes: cfg.sizes };
    let mut s = C3pScheduler::new(3, params).unwrap();
    engine::run(&cfg, &mut s).unwrap()
}

#[test]
fn irregular_tape_c3p_completes_at_3_5() {
    for mode in [EstimatorMode::Timestamped, EstimatorMode::Inferred] {
        let out = c3p_on_irregular(mode);
        assert_eq!(out.metrics.t_total, 3.5, "{mode:?}");
        let h1: Vec<f64> = out.trace.packets.iter().filter(|p| p.helper == 0).map(|p| p.tx).collect();
        assert_eq!(h1[..4], [0.0, 1.0, 2.0, 2.5], "{mode:?}");
    }
}

#[test]
fn irregular_tape_first_packets_at_zero() {
    let out = c3p_on_irregular(EstimatorMode::Inferred);
    for n in 0..3 {
        let first = out.trace.packets.iter().find(|p| p.helper == n).unwrap();
        assert_eq!(first.tx, 0.0);
    }
}

#[test]
fn irregular_tape_repetition_rr_completes_at_5() {
    for mode in [EstimatorMode::Timestamped, EstimatorMode::Inferred] {
        let cfg = explicit_config(&irregular_tape(), 6);
        let mut s = RepetitionRr::new(3, 6, 0.125, mode, cfg.sizes).unwrap();
        let out = engine::run(&cfg, &mut s).unwrap();
        assert_eq!(out.metrics.t_total, 5.0, "{mode:?}");
        // helper 1 recomputes row 3 while helper 3 is computing it
        let dup = out.trace.packets.iter().find(|p| p.helper == 0 && p.kind == engine::PacketKind::Source(2)).unwrap();
        assert_eq!((dup.start, dup.end), (Some(2.5), Some(3.5)));
        assert!(out.metrics.waste >= 1);
    }
}

#[test]
fn stop_discards_pending_events() {
    let out = c3p_on_irregular(EstimatorMode::Timestamped);
    let last = out.trace.events.last().unwrap();
    assert_eq!((last.time, last.kind), (3.5, TraceKind::Result));
    assert!(out.trace.events.iter().all(|e| e.time <= 3.5));
}
