//! Drives the `noisepulse` binary.

use std::path::Path;
use std::process::{Command, Output};

fn noisepulse(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_noisepulse"));
    cmd.args(args).env_remove("NOISEPULSE_OUT");
    if let Some(dir) = env_out {
        cmd.env("NOISEPULSE_OUT", dir);
    }
    cmd.output().unwrap()
}

const SMALL: &str = "\
dataset.n_segments = 150
ml.n_seeds = 1
ml.grid.n_trees = 10
ml.grid.max_depth = 6
ml.grid.min_samples_split = 2
puf.n_devices = 10
puf.n_trials = 4
puf.uniqueness_pairs = 20
";

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    std::fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synth_writes_rows_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = noisepulse(&["synth", "--n", "100", "--out", out.to_str().unwrap(), "--quiet"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let meta = std::fs::read_to_string(out.join("dataset_meta.csv")).unwrap();
    assert_eq!(meta.lines().count(), 101);
    let samples = std::fs::read_to_string(out.join("dataset_samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 100);
    assert!(samples.lines().all(|l| l.split(',').count() == 2500));
}

#[test]
fn missing_config_is_a_validation_error_naming_the_path() {
    let o = noisepulse(&["--config", "/no/such/file.cfg", "all"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/file.cfg"));
}

#[test]
fn unknown_flag_prints_usage() {
    let o = noisepulse(&["puf", "--frobnicate"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn invalid_config_value_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "dataset.anomaly_fraction = 1.5\n").unwrap();
    let o = noisepulse(&["--config", path.to_str().unwrap(), "synth"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_without_inputs_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = noisepulse(&["report", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn env_var_overrides_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (flag, env) = (dir.path().join("flag"), dir.path().join("env"));
    let o = noisepulse(&["--config", &cfg, "--out", flag.to_str().unwrap(), "puf", "--quiet"], Some(&env));
    assert_eq!(o.status.code(), Some(0));
    assert!(env.join("puf_stats.json").exists());
    assert!(!flag.exists());
}

#[test]
fn staged_commands_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let out_s = out.to_str().unwrap();
    for cmd in ["train", "eval", "puf", "report"] {
        let o = noisepulse(&["--config", &cfg, "--out", out_s, "--seed", "5", cmd], None);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "model.json",
        "features.csv",
        "eval_metrics.json",
        "puf_stats.json",
        "puf_devices.csv",
        "run_report.json",
        "manifest.json",
        "plots/puf.svg",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("plots/accuracy.svg omitted"));
}

#[test]
fn all_is_deterministic_across_output_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = noisepulse(&["all", "--config", &cfg, "--seed", "42", "--out", out.to_str().unwrap(), "--quiet"], None);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "run_report.json",
        "plots/accuracy.svg",
        "plots/psd.svg",
        "plots/puf.svg",
        "manifest.json",
        "psd.csv",
        "model.json",
    ] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o = noisepulse(
        &["all", "--config", &cfg, "--seed", "43", "--out", dir.path().join("c").to_str().unwrap(), "--quiet"],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(
        std::fs::read(a.join("run_report.json")).unwrap(),
        std::fs::read(dir.path().join("c/run_report.json")).unwrap()
    );
}
