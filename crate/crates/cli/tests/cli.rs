use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mcflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcflab"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_RUN: &str = r#"{
  "scenario": {"name": "small", "generator": "sphere", "radius": 1.0, "level": 2},
  "control": {"cfl": 0.01, "dt_max": 0.01, "stop_max_a": 100.0, "stop_quality": 0.02, "t_max": 0.02},
  "snapshot_every": 0.01
}"#;

#[test]
fn gen_then_neck_and_tube_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cyl.json");
    fs::write(&cfg, r#"{"name": "cyl", "generator": "capped_cylinder", "radius": 0.5, "length": 6.0, "around": 32}"#)
        .unwrap();
    let off = dir.path().join("out/cyl.off");
    let o = mcflab(&["gen", "--config", s(&cfg), "--out", s(&off)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(&off).unwrap().starts_with("OFF"));
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/cyl.truth.json")).unwrap())
            .unwrap();
    assert_eq!(truth["radius"], 0.5);

    let o = mcflab(&["necks", "--mesh", s(&off)]);
    assert!(o.status.success());
    let necks: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!necks.as_array().unwrap().is_empty());

    let tubes = dir.path().join("tubes.json");
    let o = mcflab(&["tubes", "--mesh", s(&off), "--out", s(&tubes)]);
    assert!(o.status.success());
    let t: serde_json::Value = serde_json::from_str(&fs::read_to_string(&tubes).unwrap()).unwrap();
    let c = t[0]["c_observed"].as_f64().unwrap();
    assert!((c / (2.0 * std::f64::consts::PI) - 1.0).abs() < 0.03, "{c}");
}

#[test]
fn run_and_report_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, SMALL_RUN).unwrap();
    let bundle = dir.path().join("bundle");
    let o = mcflab(&["run", "--config", s(&cfg), "--out", s(&bundle)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("scenario small"));
    assert!(bundle.join("report.json").exists());
    assert!(bundle.join("history/index.csv").exists());

    let o = mcflab(&[
        "report",
        "--bundle",
        s(&bundle),
        "--out",
        s(&dir.path().join("r.json")),
    ]);
    assert_eq!(o.status.code(), Some(0));

    // an entropy rise beyond the slack is a hard failure
    let path = bundle.join("bundle.json");
    let mut b: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let e0 = b["series"][0]["entropy"].as_f64().unwrap();
    b["series"][1]["entropy"] = serde_json::json!(e0 + 0.1);
    fs::write(&path, serde_json::to_string(&b).unwrap()).unwrap();
    let o = mcflab(&["report", "--bundle", s(&bundle)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn lojasiewicz_commands() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    let mut text = String::from("index,value\n");
    for t in 0..=200 {
        text += &format!("{t},{:?}\n", (t as f64 + 10.0).powi(-2));
    }
    fs::write(&csv, text).unwrap();

    let o = mcflab(&[
        "loj",
        "check",
        "--input",
        s(&csv),
        "--k",
        "1000",
        "--c",
        "1",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["all"], true);
    assert_eq!(v["decay"]["holds"], true);

    let o = mcflab(&["loj", "sum", "--input", s(&csv)]);
    let sum: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    let f: Vec<f64> = (0..=200).map(|t| (t as f64 + 10.0).powi(-2)).collect();
    let direct: f64 = f.windows(2).map(|w| (w[0] - w[1]).abs().sqrt()).sum();
    assert!((sum / direct - 1.0).abs() < 1e-12, "{sum} vs {direct}");

    let out = dir.path().join("delta.json");
    let o = mcflab(&[
        "loj",
        "delta",
        "--k",
        "10",
        "--eps",
        "0.1",
        "--n",
        "20",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["certificate"]["delta_hat"].as_f64().unwrap() > 0.0);
    assert_eq!(v["half_amplitude_check"]["failures"], 0);
}

#[test]
fn errors_exit_with_code_two() {
    let o = mcflab(&["run", "--standard", "no_such_scenario"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = mcflab(&["necks", "--mesh", "/nonexistent.off"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "index,value\n0,1\n1,2\n2,0\n").unwrap();
    let o = mcflab(&["loj", "check", "--input", s(&bad), "--k", "1", "--c", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
