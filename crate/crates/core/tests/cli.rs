mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::data;
use serde_json::Value;

fn qriccati(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qriccati")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn find_tanh_to_stdout() {
    let out = qriccati(&["find", path(&data("tanh.json"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    assert!(r["solution"]["residual"].as_f64().unwrap() < 1e-8);
    assert!((r["solution"]["q0"]["c0"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(r["route"], "corollary32");
}

#[test]
fn check_zero_a_is_not_applicable() {
    let out = qriccati(&["check", path(&data("a_zero.json"))]);
    assert_eq!(out.status.code(), Some(2));
    let r = stdout_json(&out);
    assert_eq!(r["route"], "not_applicable");
    assert!(r["ark_criteria"].is_object());
}

#[test]
fn find_on_inapplicable_system_reports_and_exits_two() {
    let out = qriccati(&["find", path(&data("a_zero.json"))]);
    assert_eq!(out.status.code(), Some(2));
    let r = stdout_json(&out);
    assert_eq!(r["status"], "not_applicable");
    assert_eq!(r["detail"]["kind"], "not_applicable");
}

#[test]
fn emit_trajectory_writes_two_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = qriccati(&["find", path(&data("quaternionic.json")), "--emit-trajectory", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let mut names: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["quaternionic.report.json", "quaternionic.traj.csv"]);
    let csv = fs::read_to_string(dir.path().join("quaternionic.traj.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,w,x,y,z,c0,c1,c2,c3"));
    assert!(lines.all(|l| l.split(',').count() == 9));
    assert!(!csv.contains('\r'));
}

#[test]
fn reruns_are_byte_identical() {
    for cmd in ["find", "check"] {
        let a = qriccati(&[cmd, path(&data("quaternionic.json"))]);
        let b = qriccati(&[cmd, path(&data("quaternionic.json"))]);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
}

#[test]
fn compare_three_systems() {
    let inputs = tempfile::tempdir().unwrap();
    for name in ["tanh.json", "quaternionic.json", "imaginary_drift.json"] {
        fs::copy(data(name), inputs.path().join(name)).unwrap();
    }
    let out_dir = tempfile::tempdir().unwrap();
    let out = qriccati(&["compare", path(inputs.path()), "--out", path(out_dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.path().join("compare.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "system,thm31_applicable,thm11_applicable,found,residual,m0");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("imaginary_drift,true,false,true,"));
    assert!(lines[2].starts_with("quaternionic,true,false,true,"));
    assert!(lines[3].starts_with("tanh,true,true,true,"));
}

#[test]
fn missing_period_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    fs::write(&f, r#"{"a": {"c0": {"const": 1}}}"#).unwrap();
    let out = qriccati(&["check", path(&f)]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`T`"), "{err}");
    assert!(err.contains("bad.json"), "{err}");

    let out = qriccati(&["check", path(&dir.path().join("absent.json"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn config_file_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"grid": 64, "shade": 2}"#).unwrap();
    let out = qriccati(&["check", path(&data("tanh.json")), "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(4));
    fs::write(&cfg, r#"{"grid": 64}"#).unwrap();
    let out = qriccati(&["check", path(&data("tanh.json")), "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["grid_size"], 64);
    let out = qriccati(&["check", path(&data("tanh.json")), "--rtol", "-1"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn classify_opposite_equilibria() {
    let out = qriccati(&["classify", path(&data("tanh.json")), "--qa=-1,0,0,0", "--qb", "1,0,0,0", "--periods", "30"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    assert_eq!(r["classification"], "drift_negative");
    assert!((r["drift_rate"].as_f64().unwrap() + 2.0).abs() < 1e-6);
}

#[test]
fn integrate_escape_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("blowup.json");
    fs::write(&f, r#"{"T": 1, "a": {"c0": {"const": -1}}}"#).unwrap();
    let out = qriccati(&["integrate", path(&f), "--q0", "1,0,0,0", "--t-end", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("escaped"));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("t,w,x,y,z,c0,c1,c2,c3\n"));

    let out = qriccati(&["integrate", path(&data("tanh.json")), "--q0", "0,0,0,0", "--t-end", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 5.0);
    assert!((last[1] - 5f64.tanh()).abs() < 1e-8);
}

#[test]
fn reduce_writes_replayable_system() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("neg.json");
    fs::write(&f, r#"{"T": 1, "a": {"c0": {"const": -1}, "c1": {"const": 0.5}}, "d": {"c0": {"const": 1}}}"#).unwrap();
    let out = qriccati(&["reduce", path(&f), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("neg.reduced.json")).unwrap()).unwrap();
    assert_eq!(r["output_case"], "I");
    assert!(!r["record"]["steps"].as_array().unwrap().is_empty());
    // the reduced system is itself a valid input file
    let again = dir.path().join("again.json");
    fs::write(&again, serde_json::to_string(&r["system"]).unwrap()).unwrap();
    let out = qriccati(&["check", path(&again)]);
    assert_ne!(out.status.code(), Some(4));
}

#[test]
fn reduce_with_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let lam = dir.path().join("lambda.json");
    fs::write(&lam, r#"{"T": 1, "lambda": {"c0": {"const": 2, "harmonics": [[1, 0, 0.5]]}}}"#).unwrap();
    let out = qriccati(&["reduce", path(&data("tanh.json")), "--lambda", path(&lam)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    assert_eq!(r["lambda_fit"]["exact"], false);
    assert!(r["lambda_fit"]["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(r["record"]["steps"][0]["step"]["kind"], "lambda_conjugate");
    assert_eq!(r["output_case"], "I");

    // an imaginary λ leaves a with a sign-changing component
    fs::write(&lam, r#"{"T": 1, "lambda": {"c0": {"const": 2}, "c1": {"harmonics": [[1, 0, 0.5]]}}}"#).unwrap();
    let out = qriccati(&["reduce", path(&data("tanh.json")), "--lambda", path(&lam)]);
    assert_eq!(out.status.code(), Some(2));
    let r = stdout_json(&out);
    assert_eq!(r["output_case"], "unclassified");
    assert_eq!(r["record"]["steps"].as_array().unwrap().len(), 1);
}
