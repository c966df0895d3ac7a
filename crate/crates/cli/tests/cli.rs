use std::fs;
use std::process::Command;

const CONFIG: &str = r#"{
    "model": {
        "breakpoints": [0.0],
        "a": {"segments": [{"kind": "constant", "c0": 1.0}, {"kind": "constant", "c0": -1.0}]},
        "sigma": {"segments": [{"kind": "constant", "c0": 1.0}, {"kind": "constant", "c0": 1.0}]},
        "x0": 0.0, "T": 1.0
    },
    "experiment": {
        "epsilons": [0.6, 0.5, 0.4], "n_paths": 1000, "h": 0.01,
        "event": {"kind": "terminal_interval", "lower": 0.3, "upper": null}
    },
    "optimize": {"n": 16, "restarts": 2}
}"#;

fn ldp(args: &[&str]) -> (bool, serde_json::Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_ldp"))
        .args(args)
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    (
        out.status.success(),
        serde_json::from_str(&text).unwrap_or(serde_json::Value::Null),
    )
}

#[test]
fn verify_then_action_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("o");
    let (ok, v) = ldp(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "4",
        "--threads",
        "1",
    ]);
    assert!(ok, "{v}");
    assert!(out.join("report.json").exists() && out.join("ldp_curve.csv").exists());
    let rate = v["summary"]["rate_target"].as_f64().unwrap();
    let argmin = out.join("argmin.csv");
    let (ok, v) = ldp(&[
        "action",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--path",
        argmin.to_str().unwrap(),
    ]);
    assert!(ok, "{v}");
    assert!((v["summary"]["total"].as_f64().unwrap() - rate).abs() < 1e-12);
}

#[test]
fn failures_print_an_error_object() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, CONFIG.replace("\"T\": 1.0", "\"T\": \"one\"")).unwrap();
    let (ok, v) = ldp(&[
        "coeffs",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!ok);
    assert_eq!(v["error"]["kind"], "ConfigError");
    assert_eq!(v["error"]["path"], "model.T");

    let (ok, v) = ldp(&["coeffs", "--config", "/nonexistent.json"]);
    assert!(!ok);
    assert_eq!(v["error"]["kind"], "IoError");

    let (ok, v) = ldp(&["frobnicate"]);
    assert!(!ok);
    assert_eq!(v["error"]["kind"], "UsageError");
}
