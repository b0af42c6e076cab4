use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::Value;

use harris_kinetics::cli::config::RunConfig;
use harris_kinetics::cli::{resolve, SUBCOMMANDS};
use harris_kinetics::models::presets::PRESET_NAMES;

fn bin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harris-kinetics"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("json error line on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn rates_writes_manifest_with_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(&["rates", "--doeblin", "alpha=0.5", "tau=1"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let line: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(line["result"]["C"], 2.0);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "rates");
    assert_eq!(m["exit_code"], 0);
    let outputs = m["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|f| f["path"] == "rate.json"));
    for f in outputs {
        let bytes = std::fs::read(tmp.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn usage_errors_exit_two_with_json_detail() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(&["rates", "--doeblin", "alpha=0.5"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["exit_code"], 2);
    assert!(e["message"].as_str().unwrap().contains("tau"));

    let o = bin(&["rates", "--doeblin", "alpha=1.5", "tau=1"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("alpha"));

    let o = bin(&["tv-decay"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    let o = bin(&["simulate", "--model", "no_such_model"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    let o = bin(&["no-such-command"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_certificate_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(&["verify-drift", "--model", "linear_bgk_r2", "--zeta", "2", "--D", "0.1"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("drift_report.json")).unwrap()).unwrap();
    assert_eq!(r["passed"], false);
}

#[test]
fn empty_minorisation_is_inconclusive() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(
        &["minorisation", "--model", "torus_bgk", "--tau", "0.5", "--bins", "16", "--paths", "20", "--n-init", "2"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn replay_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let o = bin(&["--seed", "5", "simulate", "--model", "torus_bgk"], &run);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = run.join("manifest.json");
    let o = bin(&["replay", manifest.to_str().unwrap()], &tmp.path().join("again"));
    assert_eq!(o.status.code(), Some(0));

    let mut m: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    for f in m["outputs"].as_array_mut().unwrap() {
        if f["path"].as_str().unwrap().ends_with(".csv") {
            f["sha256"] = Value::from("0".repeat(64));
        }
    }
    std::fs::write(&manifest, serde_json::to_vec(&m).unwrap()).unwrap();
    let o = bin(&["replay", manifest.to_str().unwrap()], &tmp.path().join("third"));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn seed_changes_the_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let read = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = bin(&["--seed", seed, "simulate", "--model", "kfp_quadratic"], &out);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out.join("trajectories.csv")).unwrap()
    };
    assert_eq!(read("1", "a"), read("1", "b"));
    assert_ne!(read("1", "a"), read("2", "c"));
}

#[test]
fn models_lists_every_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(&["models"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in PRESET_NAMES {
        assert!(text.contains(name), "{name} missing");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn resolve_is_idempotent(idx in 0..PRESET_NAMES.len(), seed in any::<u64>(), cmd in 0..SUBCOMMANDS.len()) {
        let cmd = SUBCOMMANDS[cmd];
        prop_assume!(cmd != "rates");
        let cfg = RunConfig { seed, model: Some(Value::from(PRESET_NAMES[idx])), ..Default::default() };
        if let Ok(once) = resolve(cmd, cfg) {
            let twice = resolve(cmd, once.clone()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
