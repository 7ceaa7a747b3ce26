//! End-to-end tests through the compiled binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hawkes-align")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_params(dir: &Path, mu: &[f64]) -> PathBuf {
    let c = mu.len();
    let a: Vec<Vec<f64>> = (0..c)
        .map(|_| (0..c).map(|_| 0.04 / c as f64).collect())
        .collect();
    let path = dir.join("params.json");
    let value = serde_json::json!({"mu": mu, "a": a, "beta": 1.0});
    fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn simulate(dir: &Path, params: &Path, seed: u64, out_name: &str) -> PathBuf {
    let out = dir.join(out_name);
    run_ok(&[
        "simulate",
        "--params",
        params.to_str().unwrap(),
        "--horizon",
        "50",
        "--count",
        "3",
        "--seed",
        &seed.to_string(),
        "--out",
        out.to_str().unwrap(),
    ]);
    out.join("events.csv")
}

#[test]
fn simulate_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), &[0.3, 0.7, 1.1]);
    let a = simulate(dir.path(), &params, 42, "a");
    let b = simulate(dir.path(), &params, 42, "b");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = simulate(dir.path(), &params, 43, "c");
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    // Re-ingest: aligning the generated corpus with itself runs cleanly.
    let out = dir.path().join("aligned");
    run_ok(&[
        "align",
        "--source",
        a.to_str().unwrap(),
        "--target",
        a.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--outer-rounds",
        "1",
        "--hp-steps",
        "5",
    ]);
    assert!(out.join("plan.csv").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn simulate_zero_mu_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), &[0.0, 0.0]);
    let events = simulate(dir.path(), &params, 1, "zero");
    assert_eq!(fs::read_to_string(events).unwrap(), "seq_id,time,type\n");
}

#[test]
fn eval_matches_hand_computed_metrics() {
    let dir = tempfile::tempdir().unwrap();
    // Scaled 10x10 identity truth as the plan: acc 1, sim 1, entropy ln 10.
    let c = 10usize;
    let mut truth = String::new();
    let mut plan = String::new();
    for i in 0..c {
        let t_row: Vec<String> = (0..c).map(|j| if i == j { "1" } else { "0" }.into()).collect();
        let p_row: Vec<String> = (0..c)
            .map(|j| if i == j { format!("{}", 1.0 / c as f64) } else { "0.0".into() })
            .collect();
        truth.push_str(&(t_row.join(",") + "\n"));
        plan.push_str(&(p_row.join(",") + "\n"));
    }
    let truth_path = dir.path().join("truth.csv");
    let plan_path = dir.path().join("plan.csv");
    fs::write(&truth_path, truth).unwrap();
    fs::write(&plan_path, plan).unwrap();

    let out = run_ok(&[
        "eval",
        "--plan",
        plan_path.to_str().unwrap(),
        "--truth",
        truth_path.to_str().unwrap(),
        "--k",
        "1",
    ]);
    let metrics: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(metrics["acc_k"], 1.0);
    assert_eq!(metrics["k"], 1);
    assert!((metrics["sim"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((metrics["entropy"].as_f64().unwrap() - 10f64.ln()).abs() < 1e-12);

    // Uniform plan: entropy 2 ln 10 = 4.605.
    let uniform: String = (0..c)
        .map(|_| vec!["0.01"; c].join(",") + "\n")
        .collect();
    let uniform_path = dir.path().join("uniform.csv");
    fs::write(&uniform_path, uniform).unwrap();
    let out = run_ok(&[
        "eval",
        "--plan",
        uniform_path.to_str().unwrap(),
        "--truth",
        truth_path.to_str().unwrap(),
    ]);
    let metrics: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((metrics["entropy"].as_f64().unwrap() - 2.0 * 10f64.ln()).abs() < 1e-12);
}

#[test]
fn eval_validation_and_io_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let truth_path = dir.path().join("truth.csv");
    let plan_path = dir.path().join("plan.csv");
    fs::write(&truth_path, "1,0\n0,1\n").unwrap();
    fs::write(&plan_path, "0.5,0.0\n0.0,0.5\n").unwrap();

    // K beyond the column count: validation error, exit 2.
    let out = run(&[
        "eval",
        "--plan",
        plan_path.to_str().unwrap(),
        "--truth",
        truth_path.to_str().unwrap(),
        "--k",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Shape mismatch names both dimensions, exit 2.
    let wide = dir.path().join("wide.csv");
    fs::write(&wide, "0.2,0.2,0.2\n0.2,0.2,0.2\n").unwrap();
    let out = run(&[
        "eval",
        "--plan",
        wide.to_str().unwrap(),
        "--truth",
        truth_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("2x2") && msg.contains("2x3"), "message: {msg}");

    // Missing file: exit 4.
    let out = run(&[
        "eval",
        "--plan",
        dir.path().join("missing.csv").to_str().unwrap(),
        "--truth",
        truth_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn align_emits_all_artifacts_and_pgm_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), &[0.2, 0.6, 1.2]);
    let events = simulate(dir.path(), &params, 5, "data");
    let truth_path = dir.path().join("truth.csv");
    fs::write(&truth_path, "1,0,0\n0,1,0\n0,0,1\n").unwrap();
    let out_dir = dir.path().join("aligned");
    run_ok(&[
        "align",
        "--source",
        events.to_str().unwrap(),
        "--target",
        events.to_str().unwrap(),
        "--truth",
        truth_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--outer-rounds",
        "2",
        "--hp-steps",
        "10",
    ]);
    for name in [
        "plan.csv",
        "plan.pgm",
        "params_source.json",
        "params_target.json",
        "trace.csv",
        "metrics.json",
        "manifest.json",
    ] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    // Self-alignment with the identity truth scores perfectly.
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["acc_k"], 1.0);

    // PGM: 8-bit binary, C_t wide and C_s tall, max level 255.
    let pgm = fs::read(out_dir.join("plan.pgm")).unwrap();
    let header = String::from_utf8_lossy(&pgm[..11]);
    assert!(header.starts_with("P5\n3 3\n255\n"), "header: {header}");
    assert_eq!(pgm.len(), 11 + 9);
    assert_eq!(pgm[11..].iter().copied().max(), Some(255));

    // The emitted plan re-ingests through eval without error.
    run_ok(&[
        "eval",
        "--plan",
        out_dir.join("plan.csv").to_str().unwrap(),
        "--truth",
        truth_path.to_str().unwrap(),
    ]);
}

#[test]
fn config_file_is_applied_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), &[0.4, 0.9]);
    let events = simulate(dir.path(), &params, 9, "data");
    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        r#"{"alpha": 0.5, "outer_rounds": 1, "hp_steps": 4, "seed": 11}"#,
    )
    .unwrap();
    let out_a = dir.path().join("out_a");
    run_ok(&[
        "align",
        "--source",
        events.to_str().unwrap(),
        "--target",
        events.to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["alpha"], 0.5);
    assert_eq!(manifest["config"]["outer_rounds"], 1);
    assert_eq!(manifest["seed"], 11);

    // A flag overrides the same field from the file.
    let out_b = dir.path().join("out_b");
    run_ok(&[
        "align",
        "--source",
        events.to_str().unwrap(),
        "--target",
        events.to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
        "--alpha",
        "0.25",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["alpha"], 0.25);

    // Unknown config keys are rejected up front.
    fs::write(&config_path, r#"{"alhpa": 0.5}"#).unwrap();
    let out = run(&[
        "align",
        "--source",
        events.to_str().unwrap(),
        "--target",
        events.to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        dir.path().join("out_c").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_ingestion_reports_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("events.csv");
    let meta = dir.path().join("events.meta.json");
    fs::write(&csv, "seq_id,time,type\n0,1.0,0\n0,oops,1\n").unwrap();
    fs::write(&meta, r#"{"horizons": {"0": 10.0}, "num_types": 2}"#).unwrap();
    let out = run(&[
        "align",
        "--source",
        csv.to_str().unwrap(),
        "--target",
        csv.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "message: {msg}");
}
