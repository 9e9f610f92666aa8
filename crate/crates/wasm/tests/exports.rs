use c3p_wasm::{idle_curve_data, soliton_data, timeline_data};

#[test]
fn timeline_covers_every_scheduler() {
    for s in ["c3p", "rr", "uncoded", "static", "nonergodic", "hcmm_like"] {
        let t = timeline_data(s, 6, 120, 4.0, 5.0, false, 1).unwrap();
        assert!(t.t_total > 0.0);
        assert!(t.bars.iter().all(|b| b.tx <= b.start && b.start <= b.end));
        assert!(t.bars.iter().filter(|b| b.useful).count() >= 120);
        assert_eq!(t.efficiency.len(), 6);
    }
}

#[test]
fn timeline_rejects_bad_input() {
    assert!(timeline_data("fastest", 4, 50, 2.0, 5.0, false, 0).is_err());
    assert!(timeline_data("c3p", 0, 50, 2.0, 5.0, false, 0).is_err());
    assert!(timeline_data("c3p", 4, 50, 0.5, 5.0, false, 0).is_err());
}

#[test]
fn idle_curve_starts_at_full_efficiency() {
    let c = idle_curve_data(2.0, 0.5, 1.0, 11, 0).unwrap();
    assert_eq!(c.efficiency[0], 1.0);
    assert_eq!(c.expected_tu[0], 0.0);
    assert!(c.efficiency.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    for [r, mc] in &c.monte_carlo {
        assert!((mc - c3p_core::theory::expected_tu(2.0, 0.5, *r)).abs() < 0.01);
    }
}

#[test]
fn soliton_pmf_sums_to_one() {
    let v = soliton_data(200, 0.1, 0.5, 20, 3).unwrap();
    let s: f64 = v.pmf.iter().sum();
    assert!((s - 1.0).abs() < 1e-4, "{s}");
    assert_eq!(v.overhead.len(), 20);
    assert!(v.overhead.iter().all(|k| *k >= 0.0));
    let json = serde_json::to_string(&v).unwrap();
    assert!(json.contains("\"mean_degree\""));
}
