use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn svip(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svip"))
        .args(args)
        .env("SVIP_OUTPUT_DIR", dir.join("out"))
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = svip(
        dir.path(),
        &["simulate", "--alg", "mv1", "--n", "1000", "--s-rule", "one-over-n", "--a", "2", "--seed", "7"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["report"]["total_cost"].as_f64().unwrap() > 0.0);
    assert_eq!(v["config"]["seed"], 7);
    assert!(dir.path().join("out/simulate.json").exists());
    assert!(dir.path().join("out/displacements.csv").exists());
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--alg", "i1", "--n", "100", "--eps", "0.1", "--tau", "0.1", "--a", "1", "--seed", "7"];
    let first = svip(dir.path(), &args);
    let second = svip(dir.path(), &args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn simulate_rejects_non_square_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = svip(dir.path(), &["simulate", "--alg", "mvd", "--d", "2", "--n", "10"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("n must be a perfect d-th power"), "{}", stderr(&out));
}

#[test]
fn simulate_reruns_from_its_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let first = svip(dir.path(), &["simulate", "--alg", "id", "--d", "3", "--n", "216", "--a", "1.5", "--seed", "3"]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let artifact = dir.path().join("saved.json");
    std::fs::copy(dir.path().join("out/simulate.json"), &artifact).unwrap();
    let again = svip(dir.path(), &["simulate", "--config", artifact.to_str().unwrap()]);
    assert_eq!(code(&again), 0, "{}", stderr(&again));
    assert_eq!(first.stdout, again.stdout);
}

#[test]
fn missing_algorithm_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&svip(dir.path(), &["simulate", "--n", "10"])), 2);
    assert_eq!(code(&svip(dir.path(), &["simulate", "--alg", "mv9", "--n", "10"])), 2);
    assert_eq!(code(&svip(dir.path(), &["simulate", "--alg", "mv1", "--n", "10", "--s-rule", "below"])), 2);
}

#[test]
fn sweep_threshold_regime_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = svip(dir.path(), &["sweep", "--alg", "mv1", "--s-rule", "at", "--a", "2"]);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    let summary = read_json(&dir.path().join("out/sweep.json"));
    assert!(summary["slope"].as_f64().unwrap().abs() < 0.1);
    assert_eq!(summary["verdict"], "PASS");
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert!(csv.starts_with("n,mean_cost,std_error,trials\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn sweep_linear_regime_passes_at_a1() {
    let dir = tempfile::tempdir().unwrap();
    let out = svip(dir.path(), &["sweep", "--alg", "mv1", "--s-rule", "above", "--eps", "0.1", "--a", "1"]);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    let slope = read_json(&dir.path().join("out/sweep.json"))["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.1, "{slope}");
}

#[test]
fn sweep_wrong_prediction_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = svip(dir.path(), &["sweep", "--alg", "mv1", "--a", "2", "--trials", "200", "--predicted-exponent", "-2"]);
    assert_eq!(code(&out), 1);
    assert_eq!(read_json(&dir.path().join("out/sweep.json"))["verdict"], "FAIL");
}

#[test]
fn sweep_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = svip(dir.path(), &["sweep", "--alg", "mvd", "--n-grid", "16,20,64"]);
    assert_eq!(code(&out), 2);
    let out = svip(dir.path(), &["sweep", "--alg", "i1", "--s-rule", "at"]);
    assert_eq!(code(&out), 2);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let out = svip(dir.path(), &["sweep", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_rerun_with_other_workers_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let first = svip(
        dir.path(),
        &["sweep", "--alg", "mvd", "--trials", "200", "--workers", "1", "--output-dir", a.to_str().unwrap()],
    );
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let config = a.join("sweep.json");
    let second = svip(
        dir.path(),
        &["sweep", "--config", config.to_str().unwrap(), "--workers", "3", "--output-dir", b.to_str().unwrap()],
    );
    assert_eq!(code(&second), 0);
    for name in ["sweep.csv", "sweep.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"alg": "mv1", "n_grid": [64, 128, 256], "trials": 50, "a": 4, "seed": 1}"#).unwrap();
    let out = svip(dir.path(), &["sweep", "--config", cfg.to_str().unwrap(), "--a", "2", "--format", "json"]);
    assert!(code(&out) <= 1, "{}", stderr(&out));
    let summary = read_json(&dir.path().join("out/sweep.json"));
    assert_eq!(summary["config"]["a"], 2.0);
    assert_eq!(summary["config"]["trials"], 50);
    assert_eq!(summary["config"]["seed"], 1);
    assert!(!dir.path().join("out/sweep.csv").exists());
}

#[test]
fn exact_ratio_and_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = svip(dir.path(), &["exact", "--a", "2", "--n", "10000", "--eps1", "0"]);
    assert_eq!(code(&out), 0);
    let json = read_json(&dir.path().join("out/exact.json"));
    let ratio = json["rows"][0]["ratio"].as_f64().unwrap();
    assert!((0.99..=1.01).contains(&ratio), "{ratio}");

    let out = svip(dir.path(), &["exact", "--a", "6", "--n", "10000"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("3.75"), "{}", stdout(&out));

    assert_eq!(code(&svip(dir.path(), &["exact", "--a", "3"])), 2);
}

#[test]
fn identities_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&svip(dir.path(), &["identities"])), 0);
    assert_eq!(code(&svip(dir.path(), &["identities", "--max-a", "8"])), 0);
    let out = svip(dir.path(), &["identities", "--corrupt"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("mismatch"));
}

#[test]
fn bounds_are_bounded_after_normalizing() {
    let dir = tempfile::tempdir().unwrap();
    let out = svip(dir.path(), &["bounds", "--a", "2", "--eps", "0.1", "--tau", "0.1"]);
    assert_eq!(code(&out), 0);
    let json = read_json(&dir.path().join("out/bounds.json"));
    assert!(json["spread"].as_f64().unwrap() < 10.0);

    let out = svip(dir.path(), &["bounds", "--a", "1"]);
    assert_eq!(code(&out), 0);
    let json = read_json(&dir.path().join("out/bounds.json"));
    assert!(json["spread"].as_f64().unwrap() < 1.5);

    let out = svip(dir.path(), &["bounds", "--s-scale", "1.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = svip(dir.path(), &["verify", "--tier", "quick", "--criterion", "4,5,9"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(stdout(&out).lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    let json = read_json(&dir.path().join("out/verify.json"));
    assert_eq!(json["passed"], true);
    assert_eq!(code(&svip(dir.path(), &["verify", "--criterion", "12"])), 2);
    assert_eq!(code(&svip(dir.path(), &["verify", "--tier", "slow"])), 2);
}
