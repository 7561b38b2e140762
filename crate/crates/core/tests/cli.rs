//! End-to-end tests of the `fleb` binary: exit codes, output files, and the
//! determinism contract of the emitted payloads.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fleb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fleb"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn norms_config(dir: &Path, r: f64) -> String {
    write_config(
        dir,
        "norms.json",
        &format!(
            r#"{{"experiment":"norms",
                "grid":{{"dim":1,"extent":40.0,"points":256}},
                "datum":{{"kind":"gaussian","center":[0.0],"width":1.0,"modulation":[0.0]}},
                "s":0.5,"r":{r}}}"#
        ),
    )
}

fn tails_config(dir: &Path) -> String {
    write_config(
        dir,
        "tails.json",
        r#"{"experiment":"tails",
            "grid":{"dim":1,"extent":32.0,"points":256},
            "datum":{"kind":"gaussian","center":[0.0],"width":1.0,"modulation":[0.0]},
            "profile":"raised_cosine","law":"gaussian","seed":7,"t":0.01,
            "probe":{"kind":"region_sample","region":{"shape":"ball","center":[0.0],"radius":3.0},"count":16},
            "num_draws":2000}"#,
    )
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr should be a JSON error record")
}

#[test]
fn successful_run_writes_report_json() {
    let dir = TempDir::new().unwrap();
    let config = norms_config(dir.path(), 2.0);
    let out_dir = dir.path().join("out");
    let out = fleb(&["norms", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["payload"]["kind"], "norms");
    assert!(report["payload"]["fourier_lebesgue"].as_f64().unwrap() > 0.0);
    assert!(report["provenance"].as_str().unwrap().len() == 64);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let config = tails_config(dir.path());
    let mut payloads = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "4"), ("c", "1")] {
        let out_dir = dir.path().join(name);
        let out = fleb(&[
            "tails",
            "--config",
            &config,
            "--out",
            out_dir.to_str().unwrap(),
            "--format",
            "csv",
            "--threads",
            threads,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        payloads.push(std::fs::read(out_dir.join("payload.csv")).unwrap());
    }
    assert_eq!(payloads[0], payloads[1], "1 vs 4 threads");
    assert_eq!(payloads[0], payloads[2], "rerun");
}

#[test]
fn seed_override_changes_the_payload() {
    let dir = TempDir::new().unwrap();
    let config = tails_config(dir.path());
    let run = |name: &str, seed: Option<&str>| {
        let out_dir = dir.path().join(name);
        let mut args = vec![
            "tails",
            "--config",
            &config,
            "--out",
            out_dir.to_str().unwrap(),
            "--format",
            "csv",
        ];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let out = fleb(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("payload.csv")).unwrap()
    };
    let base = run("base", None);
    let same = run("same", Some("7"));
    let other = run("other", Some("8"));
    assert_eq!(base, same, "explicit config seed must match the default");
    assert_ne!(base, other, "a different seed must change the results");
}

#[test]
fn json_and_csv_agree_numerically() {
    let dir = TempDir::new().unwrap();
    let config = norms_config(dir.path(), 4.0);
    let json_dir = dir.path().join("json");
    let csv_dir = dir.path().join("csv");
    for (out_dir, format) in [(&json_dir, "json"), (&csv_dir, "csv")] {
        let out = fleb(&[
            "norms",
            "--config",
            &config,
            "--out",
            out_dir.to_str().unwrap(),
            "--format",
            format,
        ]);
        assert!(out.status.success());
    }
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(json_dir.join("report.json")).unwrap())
            .unwrap();
    let csv_text = std::fs::read_to_string(csv_dir.join("payload.csv")).unwrap();
    let mut lines = csv_text.lines();
    assert_eq!(lines.next().unwrap(), "s,r,fourier_lebesgue,l2");
    let fields: Vec<f64> =
        lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(fields[0], 0.5);
    assert_eq!(fields[1], 4.0);
    // csv floats are printed round-trippably, so equality is exact
    assert_eq!(fields[2], report["payload"]["fourier_lebesgue"].as_f64().unwrap());
    assert_eq!(fields[3], report["payload"]["l2"].as_f64().unwrap());
}

#[test]
fn counterexample_report_carries_the_blowup_fit() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "counterexample.json",
        r#"{"experiment":"counterexample","ks":[2,3,4,5],"s":0.0,"p":4.0,"delta":0.5}"#,
    );
    let out_dir = dir.path().join("out");
    let out =
        fleb(&["counterexample", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    let slope = report["payload"]["fit"]["fitted_slope"].as_f64().unwrap();
    assert!((slope - 0.25).abs() < 0.05, "slope {slope}");
    assert_eq!(report["payload"]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn invalid_exponent_exits_with_validation_code() {
    let dir = TempDir::new().unwrap();
    let config = norms_config(dir.path(), 1.5);
    let out = fleb(&["norms", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let record = stderr_json(&out);
    assert_eq!(record["exit_code"], 2);
    assert!(
        record["error"].as_str().unwrap().contains("r >= 2"),
        "error should name the constraint: {record}"
    );
}

#[test]
fn subcommand_config_mismatch_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = norms_config(dir.path(), 2.0);
    let out = fleb(&["propagate", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr_json(&out)["error"].as_str().unwrap().to_owned();
    assert!(msg.contains("norms") && msg.contains("propagate"), "{msg}");
}

#[test]
fn missing_config_exits_with_io_code() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    let out = fleb(&["norms", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["exit_code"], 4);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{"experiment":"counterexample","ks":[2,3,4,5],"s":0.0,"p":4.0,"delta":0.5,"bogus":1}"#,
    );
    let out = fleb(&["counterexample", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
}
