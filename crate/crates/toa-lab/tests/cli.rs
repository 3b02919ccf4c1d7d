use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_toa-lab"));
    c.env_remove("TOA_LAB_OUT");
    c
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(dir: &Path, name: &str, cfg: &Path, out: &Path) -> Output {
    bin().current_dir(dir).args(["run", name, "--config"]).arg(cfg).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn list_shows_every_experiment() {
    let o = bin().arg("list").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 15);
    for name in ["trigger-flip", "zeno-scan", "booster", "toa-kernel", "eigenstate-trigger"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = TempDir::new().unwrap();
    let empty = config(tmp.path(), "empty.json", "{}");
    let unknown_key = config(tmp.path(), "bad.json", r#"{"grid": {"n": 512, "spacing": 1}}"#);
    let other = config(tmp.path(), "other.json", r#"{"experiment": "zeno-scan"}"#);
    let negative = config(tmp.path(), "neg.json", r#"{"packet": {"sigma": -1}}"#);
    let out = tmp.path().join("runs");
    for (name, cfg) in [("no-such-experiment", &empty), ("trigger-flip", &unknown_key), ("trigger-flip", &other), ("trigger-flip", &negative)] {
        let o = run(tmp.path(), name, cfg, &out);
        assert_eq!(o.status.code(), Some(2), "{name} {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = bin().args(["run", "trigger-flip"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn validate_prints_resolved_parameters() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"experiment": "toa-kernel"}"#);
    let o = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n_t"], 1301);
    let o = bin().args(["validate", "--config"]).arg(config(tmp.path(), "e.json", "{}")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"seed": 11, "model": {"trials": 2000}}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = run(tmp.path(), "multi-trigger", &cfg, out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let files = json(&a.join("multi-trigger/manifest.json"))["outputs"].clone();
    for f in files.as_array().unwrap() {
        let f = f.as_str().unwrap();
        assert_eq!(fs::read(a.join("multi-trigger").join(f)).unwrap(), fs::read(b.join("multi-trigger").join(f)).unwrap(), "{f}");
    }
    assert_eq!(json(&a.join("multi-trigger/manifest.json"))["seed"], 11);
}

#[test]
fn manifest_records_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", "{}");
    let out = tmp.path().join("runs");
    let o = run(tmp.path(), "toa-kernel", &cfg, &out);
    assert_eq!(o.status.code(), Some(0));
    let m = json(&out.join("toa-kernel/manifest.json"));
    for key in ["experiment", "status", "exit_code", "code_version", "seed", "config", "parameters", "checks", "outputs", "timings"] {
        assert!(m.get(key).is_some(), "{key}");
    }
    assert_eq!(m["status"], "pass");
    assert_eq!(m["seed"], 0);
    for f in m["outputs"].as_array().unwrap() {
        assert!(out.join("toa-kernel").join(f.as_str().unwrap()).is_file());
    }
    let csv = fs::read_to_string(out.join("toa-kernel/series-kernel.csv")).unwrap();
    assert!(csv.starts_with("configuration,numeric_re"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn failed_check_exits_with_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", "{}");
    let out = tmp.path().join("runs");
    let o = run(tmp.path(), "zero-current", &cfg, &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let m = json(&out.join("zero-current/manifest.json"));
    assert_eq!(m["status"], "fail");
    assert_eq!(m["exit_code"], 1);
    assert!(m["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
}

#[test]
fn wrap_around_exits_with_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"evolution": {"t_total": 200}}"#);
    let out = tmp.path().join("runs");
    let o = run(tmp.path(), "trigger-flip", &cfg, &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("trigger-flip/manifest.json").exists());
}

#[test]
fn output_root_falls_back_to_env_then_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", "{}");
    let env_root = tmp.path().join("from-env");
    let o = bin().current_dir(tmp.path()).env("TOA_LAB_OUT", &env_root).args(["run", "toa-kernel", "--config"]).arg(&cfg).output().unwrap();
    assert!(o.status.success());
    assert!(env_root.join("toa-kernel/summary.json").is_file());

    let cfg_root = tmp.path().join("from-config");
    let cfg = config(tmp.path(), "d.json", &format!(r#"{{"output_dir": {:?}}}"#, cfg_root.to_str().unwrap()));
    let o = bin().current_dir(tmp.path()).env("TOA_LAB_OUT", &env_root).args(["run", "toa-kernel", "--config"]).arg(&cfg).output().unwrap();
    assert!(o.status.success());
    assert!(cfg_root.join("toa-kernel/summary.json").is_file());
}
