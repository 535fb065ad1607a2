use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn physec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_physec")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = physec(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn simulate_is_deterministic_and_full_length() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["simulate", "--seed", "7", "--out", path(&a)]);
    ok(&["simulate", "--seed", "7", "--out", path(&b)]);
    for f in ["trace.csv", "eve.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let trace = fs::read_to_string(a.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 22912 + 1);
    assert!(trace.starts_with("uplink_counter,t,rssi_dev,rssi_gw"));
    let eve = fs::read_to_string(a.join("eve.csv")).unwrap();
    assert!(eve.starts_with("uplink_counter,t,rssi_eve"));

    ok(&["simulate", "--seed", "8", "--out", path(&b)]);
    assert_ne!(fs::read(a.join("trace.csv")).unwrap(), fs::read(b.join("trace.csv")).unwrap());
}

#[test]
fn simulate_rejects_zero_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let out = physec(&["simulate", "--samples", "0", "--out", path(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("simulate"));
}

#[test]
fn noiseless_run_accepts_every_block() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim.json");
    fs::write(&sim, r#"{"n_samples": 2560, "rx_delay": 0.0, "seed": 4}"#).unwrap();
    ok(&["run", "--sim", path(&sim), "--out", path(tmp.path())]);
    let r = report(tmp.path());
    for o in r["outcomes"].as_array().unwrap() {
        assert_eq!(o["eval"]["mean_bdr"], 0.0);
        assert_eq!(o["eval"]["accepted_count"], 20);
        assert_eq!(o["eval"]["block_count"], 20);
    }
}

#[test]
fn run_output_is_reproducible_and_has_the_documented_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = |dir: &Path| {
        vec!["run".to_string(), "--sim".into(), "--seed".into(), "3".into(), "--samples".into(), "5120".into(),
             "--cutoff".into(), "0.1".into(), "--out".into(), path(dir).to_string()]
    };
    let run = |dir: &Path| ok(&args(dir).iter().map(String::as_str).collect::<Vec<_>>());
    let stdout = run(&a);
    run(&b);
    for f in ["report.json", "keys.csv", "transcript_threshold.csv", "transcript_difference.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(stdout.contains("difference"));

    let r = report(&a);
    let mut top: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
    top.sort();
    assert_eq!(
        top,
        ["aligned_samples", "input", "keys", "outcomes", "probe_period", "raw_samples", "settings", "trace_meta"]
    );
    assert_eq!(r["aligned_samples"], 5120);
    assert_eq!(r["probe_period"], 10.0);
    let outcome = &r["outcomes"][1];
    for field in ["eval", "code", "reconciled", "reconcile_failures", "randomness_failures",
                  "reconciliation_bits_sent", "randomness", "keys", "keys_agree", "pending_residual_bits", "eve"] {
        assert!(outcome.get(field).is_some(), "{field}");
    }
    assert_eq!(outcome["eval"]["quantizer"], "difference");
    assert_eq!(outcome["code"]["t"], 13);
    assert_eq!(outcome["keys_agree"], true);
    for field in ["block_count", "accepted_count", "mean_bdr", "kgr", "mean_key_time", "per_block"] {
        assert!(outcome["eval"].get(field).is_some(), "{field}");
    }

    let transcript = fs::read_to_string(a.join("transcript_difference.csv")).unwrap();
    assert!(transcript.starts_with("block_index,code_id,syndrome_hex,verify_digest_hex"));
    assert_eq!(transcript.lines().count() - 1, outcome["eval"]["accepted_count"].as_u64().unwrap() as usize);
    let keys = fs::read_to_string(a.join("keys.csv")).unwrap();
    assert!(keys.starts_with("quantizer,role,key_hex,source_blocks"));

    let summary = ok(&["report", path(&a)]);
    assert!(summary.contains("threshold") && summary.contains("difference"));
}

#[test]
fn paper_mode_emits_one_key_per_reconciled_block() {
    let tmp = tempfile::tempdir().unwrap();
    let (gated, paper) = (tmp.path().join("g"), tmp.path().join("p"));
    let common = ["--sim", "--samples", "2560", "--quantizer", "difference", "--code", "bch-127-15-27"];
    let mut a = vec!["run"];
    a.extend(common);
    a.extend(["--out", path(&gated)]);
    ok(&a);
    let mut b = vec!["run", "--paper-mode"];
    b.extend(common);
    b.extend(["--out", path(&paper)]);
    ok(&b);

    let g = &report(&gated)["outcomes"][0];
    assert_eq!(g["keys"].as_array().unwrap().len(), 0);
    let p = &report(&paper)["outcomes"][0];
    let usable = p["reconciled"].as_u64().unwrap() - p["randomness_failures"].as_u64().unwrap();
    assert_eq!(p["keys"].as_array().unwrap().len() as u64, usable);
    let keys = fs::read_to_string(paper.join("keys.csv")).unwrap();
    let roles: Vec<&str> = keys.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).take(2).collect();
    assert_eq!(roles, ["AppSKey", "NwkSEncKey"]);
}

#[test]
fn sweep_writes_one_row_per_cutoff() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["sweep", "--sim", "--samples", "3840", "--cutoffs", "0.05,0.1,0.15,0.2", "--out", path(tmp.path())]);
    let csv = fs::read_to_string(tmp.path().join("kgr.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "cutoff,kgr_threshold,kgr_difference");
    assert_eq!(lines.len(), 5);
}

#[test]
fn csv_input_round_trips_through_run() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["simulate", "--samples", "1280", "--out", path(tmp.path())]);
    let trace = tmp.path().join("trace.csv");
    let eve = tmp.path().join("eve.csv");
    let out = tmp.path().join("run");
    ok(&["run", "--input", path(&trace), "--eve", path(&eve), "--out", path(&out)]);
    let r = report(&out);
    assert_eq!(r["aligned_samples"], 1280);
    assert!(r["outcomes"][0]["eve"]["mean_bdr_ea"].as_f64().unwrap() > 0.3);

    let bad = physec(&["run", "--input", path(&trace), "--seed", "1", "--out", path(&out)]);
    assert!(!bad.status.success());
}

#[test]
fn stage_errors_name_the_stage_and_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("trace.csv");
    fs::write(&trace, "uplink_counter,t,rssi_dev,rssi_gw\n1,0,-80,abc\n").unwrap();
    let out = physec(&["run", "--input", path(&trace), "--out", path(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));

    let out = physec(&["run", "--sim", "--cutoff", "0.3", "--out", path(tmp.path())]);
    assert!(!out.status.success());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"input": {"sim": {"n_samples": 1280, "seed": 2}}, "quantizer": "threshold", "cutoff": 0.15}"#,
    )
    .unwrap();
    ok(&["run", "--config", path(&cfg), "--cutoff", "0.2", "--out", path(tmp.path())]);
    let r = report(tmp.path());
    assert_eq!(r["settings"]["cutoff"], 0.2);
    assert_eq!(r["outcomes"].as_array().unwrap().len(), 1);
    assert_eq!(r["aligned_samples"], 1280);
}
