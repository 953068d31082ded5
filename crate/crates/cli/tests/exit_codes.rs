use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn faultstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faultstab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
  "grid": {"x1": [-3, 3], "x2": [-3, 3], "n1": 7, "n2": 7},
  "quad": {"q1": 8, "q2": 8},
  "basis": {"family": "sine", "n1": 2, "n2": 2},
  "lipschitz": {"options": {"pairs": 4, "near_points": 2}},
  "seed": 3
}"#;

#[test]
fn default_config_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{}");
    let out = dir.path().join("out");
    let o = faultstab(&["verify-integrals", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let printed = String::from_utf8(o.stdout).unwrap();
    assert!(Path::new(printed.trim()).ends_with("verify-integrals/summary.json"));
    assert!(out.join("verify-integrals/integrals.csv").exists());
}

#[test]
fn invalid_field_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"grid": {"x1": [0, 1], "x2": [0, 1], "n1": 4, "n2": 5}}"#);
    let o = faultstab(&["verify-integrals", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));
}

#[test]
fn unmet_threshold_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"integrals": {"tolerance": 1e-30}}"#);
    let o = faultstab(&["verify-integrals", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unreadable_config_is_invalid() {
    let o = faultstab(&["verify-integrals", "--config", "/nonexistent/faultstab.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{}");
    let blocked = dir.path().join("config.json").join("out");
    let o = faultstab(&["verify-integrals", "--config", &cfg, "--out", blocked.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seeded_scan_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let csv = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = faultstab(&["lipschitz-scan", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("lipschitz-scan/lipschitz.csv")).unwrap()
    };
    let a = csv("a", "2");
    assert_eq!(a, csv("b", "2"));
    assert_eq!(a, csv("c", "1"));
}
