use std::fs;
use std::process::Command;

use c3p_cli::verify::{verify, VerifyOptions};
use c3p_cli::{run_experiment, trace_csv, ExperimentConfig};
use c3p_core::SchedulerKind;

const BIN: &str = env!("CARGO_BIN_EXE_c3p");

const SMALL: &str = r#"{
    "rows": [60, 120], "helpers": 4, "scenario": ["per_packet_iid", "fixed_per_helper"],
    "schedulers": ["c3p", "static", "nonergodic", "uncoded", "rr", "hcmm_like"],
    "rate_set": [1.0, 2.0, 4.0], "shift": {"fixed": 0.5}, "channel_mbps": [10.0, 20.0],
    "replicates": 3, "base_seed": 11
}"#;

fn write_config(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn run_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for (out, workers) in [("a", "1"), ("b", "3")] {
        let st = Command::new(BIN)
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(out))
            .env("C3P_WORKERS", workers)
            .output()
            .unwrap();
        assert!(st.status.success());
    }
    for f in ["runs.csv", "theory.csv", "aggregate.csv", "improvement.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
    let runs = fs::read_to_string(dir.path().join("a/runs.csv")).unwrap();
    assert!(
        runs.starts_with("R,N,scenario,scheduler,seed,T_total,K_actual,mean_efficiency,min_efficiency,waste,wall_ms\n")
    );
    // 2 sizes × 2 scenarios × 3 replicates × 6 schedulers
    assert_eq!(runs.lines().count(), 1 + 72);
}

#[test]
fn replicates_share_tapes_and_use_consecutive_seeds() {
    let cfg = ExperimentConfig::from_json(SMALL).unwrap();
    let out = run_experiment(&cfg, Some(2)).unwrap();
    let seeds: Vec<u64> = out.runs.iter().filter(|r| r.scheduler == "c3p").map(|r| r.seed).collect();
    assert_eq!(seeds, [11, 12, 13, 11, 12, 13, 11, 12, 13, 11, 12, 13]);
    // static and uncoded see the same runtimes on per-packet draws, so they tie
    for (s, u) in out
        .runs
        .iter()
        .filter(|r| r.scheduler == "static" && r.scenario == "per_packet_iid")
        .zip(out.runs.iter().filter(|r| r.scheduler == "uncoded" && r.scenario == "per_packet_iid"))
    {
        assert_eq!(s.t_total, u.t_total);
    }
}

#[test]
fn wall_time_only_when_asked() {
    let cfg = ExperimentConfig::from_json(
        &SMALL.replace("\"base_seed\": 11", "\"base_seed\": 11, \"record_wall_time\": true"),
    )
    .unwrap();
    let out = run_experiment(&cfg, None).unwrap();
    assert!(out.runs.iter().all(|r| r.wall_ms.is_some()));
    let plain = run_experiment(&ExperimentConfig::from_json(SMALL).unwrap(), None).unwrap();
    assert!(plain.runs.iter().all(|r| r.wall_ms.is_none()));
}

#[test]
fn bad_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        SMALL.replace("\"rr\"", "\"fastest\""),
        SMALL.replace("\"replicates\": 3", "\"replicates\": 0"),
        SMALL.replace("\"rows\": [60, 120]", "\"rows\": []"),
        "{ not json".to_string(),
    ];
    for body in cases {
        let cfg = write_config(dir.path(), &body);
        let out = Command::new(BIN)
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join("o"))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{body}");
    }
    let missing = Command::new(BIN).args(["run", "--config", "/nonexistent.json", "--out", "/tmp/x"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn event_cap_aborts_with_distinct_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("\"base_seed\": 11", "\"base_seed\": 11, \"event_cap\": 50"));
    let out =
        Command::new(BIN).args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("event"));
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN).args(["verify", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.starts_with("check,passed,value,expected,tolerance,detail\n"));
    assert!(!csv.contains(",false,"));
}

fn mutated_tu(mu: f64, a: f64, rtt: f64) -> f64 {
    // 1/(eμ) replaced by 1/(2μ)
    let e = 2.0;
    let _ = a;
    if rtt < 1.0 / mu {
        (1.0 - (mu * rtt).exp()) / (e * mu) + rtt
    } else {
        1.0 / (e * mu)
    }
}

#[test]
fn verify_catches_mutated_idle_formula() {
    let opts = VerifyOptions { expected_tu: mutated_tu, tu_samples: 200_000, ..VerifyOptions::default() };
    let report = verify(&opts).unwrap();
    let failed: Vec<&str> = report.failures().map(|c| c.check.as_str()).collect();
    assert!(failed.contains(&"expected_tu_vs_monte_carlo"), "{failed:?}");
    assert!(!report.passed());
}

#[test]
fn trace_emits_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = Command::new(BIN).args(["trace", "--config"]).arg(&cfg).args(["--seed", "4"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("time,helper,event,packet\n"));
    let lib = trace_csv(&ExperimentConfig::from_json(SMALL).unwrap(), 4, SchedulerKind::C3p).unwrap();
    assert_eq!(text, lib);
    let times: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));

    let bad = Command::new(BIN)
        .args(["trace", "--config"])
        .arg(&cfg)
        .args(["--seed", "4", "--scheduler", "nope"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
