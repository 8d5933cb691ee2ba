use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gnc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnc")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const DEVICE: &str = r#""device": {"geometry": {"edge_type": "zigzag", "lead_width": 20, "total_length": 20}, "lattice": {"scaling_factor": 10}}"#;

fn gate_config(start: f64, stop: f64) -> String {
    format!(r#"{{{DEVICE}, "sweep": {{"kind": "gate", "gate_V": {{"start": {start}, "stop": {stop}, "points": 5}}}}}}"#)
}

#[test]
fn sweep_writes_manifest_and_analyze_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &gate_config(-10.0, 10.0));
    let out = dir.path().join("run");
    let o = gnc(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.json").exists() && out.join("trace.csv").exists());
    let a = gnc(&["analyze", out.to_str().unwrap()]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["energy_scales"]["status"], "present");
}

#[test]
fn validation_errors_exit_one_with_paths() {
    let dir = tempfile::tempdir().unwrap();
    let body = gate_config(-10.0, 10.0).replace(r#""device": {"#, r#""device": {"twist_angle": 1.1, "#);
    let cfg = write_config(dir.path(), &body);
    let o = gnc(&["sweep", "--config", &cfg, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("device.twist_angle"));
    assert_eq!(gnc(&["repro", "fig9"]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = gate_config(-10.0, 10.0).replace(r#""lead_width": 20"#, r#""lead_width": 0.5"#);
    let cfg = write_config(dir.path(), &body);
    let o = gnc(&["sweep", "--config", &cfg, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn flagged_points_exit_three_only_under_strict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &gate_config(100.0, 400.0));
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    assert_eq!(gnc(&["sweep", "--config", &cfg, "--out", out]).status.code(), Some(0));
    assert_eq!(gnc(&["sweep", "--config", &cfg, "--out", out, "--strict"]).status.code(), Some(3));
}

#[test]
fn build_and_bands_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &gate_config(-10.0, 10.0));
    let out = dir.path().join("dev");
    let out_s = out.to_str().unwrap();
    assert!(gnc(&["build", "--config", &cfg, "--out", out_s]).status.success());
    let dev: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("device.json")).unwrap()).unwrap();
    assert!(dev.is_object());
    assert!(gnc(&["bands", "--config", &cfg, "--out", out_s, "--k-points", "21"]).status.success());
    assert!(fs::read_to_string(out.join("bands.csv")).unwrap().lines().count() > 21);
}

#[test]
fn analyze_rejects_an_empty_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    fs::write(&p, "").unwrap();
    let o = gnc(&["analyze", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));
}

#[test]
fn seed_flag_sets_the_disorder_seed_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let body = gate_config(2.0, 10.0).replace(
        r#""lattice": {"scaling_factor": 10}"#,
        r#""lattice": {"scaling_factor": 10}, "disorder": {"edge_removal_probability": 0.2}"#,
    );
    let cfg = write_config(dir.path(), &body);
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = gnc(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        (m["rng_seeds"].clone(), fs::read_to_string(out.join("trace.csv")).unwrap())
    };
    let (s1, t1) = run("1", "a");
    let (s1b, t1b) = run("1", "b");
    let (s2, _) = run("2", "c");
    assert_eq!(s1, serde_json::json!([1]));
    assert_eq!(s2, serde_json::json!([2]));
    assert_eq!((s1, t1), (s1b, t1b));
}
