use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fredholm-lab"))
        .args(args)
        .env_remove("FREDHOLM_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn trivial_determinant_is_one() {
    let out = lab(&["det", "--family", "exp", "--t", "0", "--n", "5", "--v", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["results"]["value"], 1.0);
    for key in ["meta", "params", "convergence", "results"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn conjecture_example_in_unit_interval() {
    let out = lab(&["conjecture", "--rs", "0.8,0.3", "--ss", "0.5,0.2", "--offset", "3", "--size", "80"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["results"]["in_unit_interval"], true);
}

#[test]
fn argument_errors_exit_one() {
    assert_eq!(lab(&["det", "--family", "exp", "--t", "1e3"]).status.code(), Some(1));
    assert_eq!(lab(&["det", "--t", "1"]).status.code(), Some(1));
    assert_eq!(lab(&["nonsense"]).status.code(), Some(1));
    assert_eq!(lab(&["det", "--family", "growth", "--m", "4", "--r", "1.2"]).status.code(), Some(1));
}

#[test]
fn truncation_failure_exits_two() {
    let out = lab(&["det", "--family", "exp", "--t", "10", "--n", "0", "--size", "5", "--tol", "0.000000000001"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn payload_is_reproducible() {
    let args = ["mc", "--t", "1", "--samples", "5000", "--seed", "7", "--n", "1,5"];
    let a = json(&lab(&args));
    let b = json(&lab(&["--threads", "1"].iter().chain(&args).copied().collect::<Vec<_>>()));
    assert_eq!(a["meta"]["payload_sha256"], b["meta"]["payload_sha256"]);
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["meta"]["seed"], 7);
}

#[test]
fn csv_and_atomic_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let out = lab(&[
        "trace", "--family", "growth", "--m", "20", "--r", "0.3", "--offset", "14", "--format", "csv", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("route,value,error"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 3);
    assert!(values.iter().all(|v| (v - values[0]).abs() <= 1e-9 * values[0]));
}

#[test]
fn every_subcommand_emits_csv() {
    let runs: [&[&str]; 8] = [
        &["coeffs", "--family", "exp", "--t", "1", "--lo", "-2", "--hi", "2"],
        &["kernel", "--family", "growth", "--m", "3", "--r", "0.4", "--size", "3"],
        &["spectrum", "--family", "growth", "--m", "6", "--r", "0.4", "--size", "60"],
        &["prop1", "--n", "50", "--s", "1,2"],
        &["growth", "--m", "20", "--s", "1"],
        &["lemma3", "--m", "20", "--s", "0,1,2"],
        &["twlimit", "--x", "0", "--t", "5"],
        &["conjecture", "--samples", "3", "--seed", "1"],
    ];
    for args in runs {
        let mut v = args.to_vec();
        v.extend(["--format", "csv"]);
        let out = lab(&v);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.lines().count() >= 2, "{args:?}");
    }
}

#[test]
fn spectrum_example_real_and_below_one() {
    let v = json(&lab(&["spectrum", "--family", "growth", "--m", "6", "--r", "0.4", "--size", "60"]));
    assert!(v["results"]["max_imag"].as_f64().unwrap() <= 1e-9);
    let eig = v["results"]["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 60);
    for z in eig {
        let re = z[0].as_f64().unwrap();
        assert!((0.0 - 1e-9..1.0).contains(&re), "{re}");
    }
}
