use std::process::{Command, Output};

use coblab_cli::{Command as Cmd, ConstructMode, ExperimentConfig, Format};
use serde_json::Value;

fn coblab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coblab")).args(args).output().expect("binary runs")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn config_file_roundtrip_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::new(Cmd::Construct(ConstructMode::Joint));
    c.k = 4;
    c.q = 10_000;
    c.format = Format::Json;
    let path = dir.path().join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&c).unwrap()).unwrap();
    let back: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, c);

    let out = coblab(&["construct", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["header"]["config"]["k"], 4);
    assert_eq!(doc["result"]["q_sequence"].as_array().unwrap().len(), 4);
}

#[test]
fn malformed_surd_is_a_config_error() {
    let out = coblab(&["construct", "--alpha", "(1+2*sqrt(4))/3"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["status"], "config-error");
    assert_eq!(err["exit_code"], 2);
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_tolerance_is_a_config_error() {
    let out = coblab(&["approx", "--mode", "cf", "--tol", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn too_few_candidates_is_a_shortfall() {
    let out = coblab(&["construct", "--K", "40", "--Q", "100"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["status"], "shortfall");
}

#[test]
fn runs_are_byte_identical() {
    for args in [
        &["construct", "--K", "5", "--Q", "100000", "--format", "json"][..],
        &["rates", "--mode", "cesaro", "--N", "256", "--seed", "7", "--format", "csv"][..],
        &["selftest", "--seed", "3"][..],
        &["approx", "--mode", "dirichlet", "--Q", "5000", "--threads", "3", "--format", "csv"][..],
    ] {
        let a = coblab(args);
        let b = coblab(args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let one = coblab(&["approx", "--mode", "dirichlet", "--Q", "5000", "--threads", "1", "--format", "csv"]);
    let four = coblab(&["approx", "--mode", "dirichlet", "--Q", "5000", "--threads", "4", "--format", "csv"]);
    let body = |o: &Output| {
        String::from_utf8(o.stdout.clone())
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&one), body(&four));
}

#[test]
fn construct_json_report() {
    let out = coblab(&["construct", "--K", "5", "--Q", "100000"]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["header"]["schema_version"], 1);
    assert_eq!(doc["header"]["tool"], "coblab");
    assert_eq!(doc["header"]["seed"], 0);
    assert_eq!(doc["verdict"], true);
    let qs: Vec<u64> = doc["result"]["q_sequence"].as_array().unwrap().iter().map(|v| v["q"].as_u64().unwrap()).collect();
    assert_eq!(qs, [3, 7, 14, 34, 75]);
    assert!(doc["result"]["certificates"].as_array().unwrap().len() >= 3);
    assert!(doc["result"]["report_text"].as_str().unwrap().contains("[PASS]"));
}

#[test]
fn doubling_tripling_csv_is_all_ones() {
    let out = coblab(&["rates", "--mode", "doubling-tripling", "--N", "12", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,value");
    assert_eq!(rows.len(), 13);
    for (i, row) in rows[1..].iter().enumerate() {
        assert_eq!(*row, format!("{},1", i + 1));
    }
}

#[test]
fn unwritable_output_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("report.json");
    let out = coblab(&["approx", "--mode", "cf", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["status"], "config-error");
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cf.csv");
    let out = coblab(&["approx", "--mode", "cf", "--depth", "4", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("k,a_k,p_k,q_k\n0,0,0,1\n1,2,1,2\n"));
}

#[test]
fn series_file_feeds_the_checkers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    std::fs::write(&path, "n,re,im\n1,0.5,0\n-1,0.5,0\n2,0,0.25\n-2,0,-0.25\n").unwrap();
    let out = coblab(&["check", "--mode", "bad-joint-c", "--series", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["verdict"], true);

    std::fs::write(&path, "1,abc\n").unwrap();
    let out = coblab(&["check", "--mode", "bad-joint-c", "--series", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_is_rejected_where_there_is_no_table() {
    let out = coblab(&["selftest", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let out = coblab(&["selftest", "--format", "text"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains("[FAIL]"), "{text}");
    assert!(text.contains("verdict: PASS"));
}

#[test]
fn shift_certificate_passes() {
    let out = coblab(&["shift", "--K", "100"]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["verdict"], true);
}
