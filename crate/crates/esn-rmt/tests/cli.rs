use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use esn_rmt::csvio::{read_results_csv, RESULT_COLUMNS};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_esn-rmt"));
    cmd.env_remove("ESN_RMT_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn small_config(dir: &Path, name: &str, sigma: f64, extra: &str) -> PathBuf {
    let path = dir.join(name);
    let json = format!(
        r#"{{
            "matrix": {{"kind": "haar_scaled", "sigma": {sigma}, "n": 20}},
            "task": {{"kind": "mackey_glass_ahead", "steps": 1, "t_len": 40, "t_hat": 40, "history": 40}},
            "eta2_grid": {{"min": 0.01, "max": 1.0, "points": 4}},
            "trials": 3,
            "seed": 9{extra}
        }}"#
    );
    fs::write(&path, json).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sweep_without_timestamp_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "a.json", 0.9, "");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = run(&["sweep", "--config", s(&cfg), "--out", s(out), "--no-timestamp"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(text.lines().next().unwrap(), RESULT_COLUMNS.join(","));

    let rows = read_results_csv(&a).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.n == 20 && r.t_len == 40 && r.trials == 3 && r.seed == 9));
    assert!(rows.windows(2).all(|w| w[0].eta2 < w[1].eta2));
}

#[test]
fn sweep_writes_timestamp_and_uses_config_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_config.csv");
    let extra = format!(r#", "output": "{}""#, s(&out));
    let cfg = small_config(dir.path(), "a.json", 0.9, &extra);
    let o = run(&["sweep", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# generated at unix time "));
    assert_eq!(read_results_csv(&out).unwrap().len(), 4);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "a.json", 0.9, "");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let o = run(&["sweep", "--config", s(&cfg), "--out", s(&a), "--no-timestamp", "--threads", "1"]);
    assert!(o.status.success());
    let o = bin()
        .args(["sweep", "--config", s(&cfg), "--out", s(&b), "--no-timestamp"])
        .env("ESN_RMT_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn config_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");

    let o = run(&["sweep", "--config", s(&dir.path().join("missing.json")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"matrix": {"kind": "haar_scaled", "sigma": 0.9, "n": 20}, "seed": 1, "bogus": 3}"#).unwrap();
    assert_eq!(run(&["sweep", "--config", s(&bad), "--out", s(&out)]).status.code(), Some(2));

    // n = T is not a supported regime
    let square = dir.path().join("square.json");
    fs::write(
        &square,
        r#"{"matrix": {"kind": "haar_scaled", "sigma": 0.9, "n": 40},
            "task": {"kind": "delay", "tau": 1, "t_len": 40, "t_hat": 40, "history": 40}, "seed": 1}"#,
    )
    .unwrap();
    assert_eq!(run(&["sweep", "--config", s(&square), "--out", s(&out)]).status.code(), Some(2));

    let cfg = small_config(dir.path(), "a.json", 0.9, "");
    assert_eq!(run(&["sweep", "--config", s(&cfg)]).status.code(), Some(2), "no output path anywhere");
    let o = bin().args(["sweep", "--config", s(&cfg), "--out", s(&out)]).env("ESN_RMT_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn memory_curve_and_design() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mem.json");
    fs::write(
        &cfg,
        r#"{"matrix": {"kind": "haar_scaled", "sigma": 0.5, "n": 40},
            "task": {"kind": "linear_filter", "b": [1.0, -0.25, 0.0625, -0.015625], "t_len": 80, "t_hat": 80, "history": 80},
            "seed": 4,
            "memory": {"tau_max": 3}}"#,
    )
    .unwrap();
    let out = dir.path().join("mem.csv");
    let o = run(&["memory-curve", "--config", s(&cfg), "--out", s(&out), "--no-timestamp"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().starts_with("tau,mc_deteq"));
    assert_eq!(text.lines().count(), 5);

    let out = dir.path().join("design.csv");
    let o = run(&["design", "--config", s(&cfg), "--out", s(&out), "--no-timestamp"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("best sigma "));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 4);
}

#[test]
fn compare_needs_two_configs() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_config(dir.path(), "a.json", 0.9, r#", "label": "slow""#);
    let b = small_config(dir.path(), "b.json", 0.5, r#", "label": "fast""#);
    let out = dir.path().join("cmp.csv");
    let o = run(&["compare", "--config", s(&a), "--config", s(&b), "--out", s(&out), "--no-timestamp"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("eta2,"));
    assert!(header.contains("slow_test_nmse_mc") && header.contains("fast_test_nmse_theory_fixedW"));
    assert_eq!(text.lines().count(), 5);

    assert_eq!(run(&["compare", "--config", s(&a), "--out", s(&out)]).status.code(), Some(2));
}
