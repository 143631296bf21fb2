use std::f64::consts::PI;
use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn maptorus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maptorus"))
        .args(args)
        .env_remove("MAPTORUS_THREADS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = maptorus(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn value(v: &Value) -> f64 {
    v["value"].as_f64().unwrap()
}

// serde_json's default float parser may be one ulp off
fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
}

/// Same output once `runtime_ms` is dropped.
fn stable(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.contains("runtime_ms"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn klein_bottle_json_schema() {
    let v = json(&["det", "klein-bottle", "--a", "6.283185307179586", "--rho", "1", "--format", "json"]);
    for key in ["quantity", "params", "value", "tail_bound", "blocks_used", "runtime_ms"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let expected = maptorus::klein_bottle_det(2.0 * PI, 1.0).unwrap();
    assert!(same(value(&v), expected));
    // 17 significant digits
    let out = maptorus(&["det", "klein-bottle"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().find(|l| l.contains("\"value\"")).unwrap();
    let digits: String = line.split(':').nth(1).unwrap().chars().take_while(|c| *c != 'e').filter(|c| c.is_ascii_digit()).collect();
    assert_eq!(digits.len(), 17, "{line}");
}

#[test]
fn identity_mapping_torus_is_product() {
    let common = ["--base", "circle", "--rho", "0.7", "--a", "3"];
    let mt = json(&[&["det", "mapping-torus", "--isometry", "identity"][..], &common].concat());
    let pr = json(&[&["det", "product"][..], &common].concat());
    assert_eq!(value(&mt), value(&pr));

    let shifted = |target: &str| json(&[&["det", target, "--isometry", "identity", "--lambda", "0.5"][..], &common].concat());
    let (mt, pr) = (shifted("mapping-torus"), shifted("product"));
    assert_eq!(pr["quantity"], "log_det_product_shifted");
    assert!(same(value(&mt), value(&pr)));
    assert!(value(&pr) != value(&json(&[&["det", "product"][..], &common].concat())));
}

#[test]
fn csv_is_one_row_and_deterministic() {
    let a = maptorus(&["det", "t2-phi", "--format", "csv"]);
    let b = maptorus(&["det", "t2-phi", "--format", "csv"]);
    assert!(a.status.success());
    let text = String::from_utf8_lossy(&a.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("quantity,params,value,tail_bound,blocks_used,runtime_ms"));
    let strip = |s: &str| {
        let mut f: Vec<String> = s.lines().nth(1).unwrap().split(',').map(str::to_owned).collect();
        f.remove(5);
        f
    };
    assert_eq!(strip(&text), strip(&String::from_utf8_lossy(&b.stdout)));
}

#[test]
fn torsion_pathways() {
    let v = json(&["torsion", "--spec", "klein", "--pathway", "both"]);
    let d = &v["details"];
    let diff = (d["theorem"].as_f64().unwrap() - d["definition"].as_f64().unwrap()).abs();
    assert!(diff < 1e-8);
    assert!(d["difference"].as_f64().unwrap().abs() < 1e-8);
    assert!((value(&v) - (PI).ln()).abs() < 1e-12);

    let r = json(&["torsion", "--spec", "circle-rotation"]);
    assert!(value(&r).abs() < 1e-10);

    let w = json(&["torsion", "--spec", "klein", "--witten", "--t", "1.0"]);
    let x = (-2.0 * PI).exp();
    assert!((value(&w) + ((1.0 + x) / (1.0 - x)).ln()).abs() < 1e-14);
}

#[test]
fn verify_single_check_and_seed() {
    let out = maptorus(&["verify", "--only", "lemma-3.3"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["blocks_used"], 1);
    assert_eq!(v["details"]["massive-circle.passed"].as_f64(), Some(1.0));

    let a = maptorus(&["verify", "--only", "dtn-ode", "--seed", "42"]);
    let b = maptorus(&["verify", "--only", "dtn-ode", "--seed", "42"]);
    assert!(a.status.success());
    assert_eq!(stable(&a), stable(&b));

    let bad = maptorus(&["verify", "--only", "no-such-check"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn full_verification_reports_failures_with_exit_3() {
    let out = maptorus(&["verify"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["details"]["massive-circle.passed"].as_f64(), Some(1.0));
    assert_eq!(v["details"]["t2phi-oracle.passed"].as_f64(), Some(0.0));
}

#[test]
fn exit_codes() {
    assert_eq!(maptorus(&["det", "klein-bottle", "--a", "-1"]).status.code(), Some(1));
    assert_eq!(maptorus(&["det", "nonsense"]).status.code(), Some(1));
    assert_eq!(maptorus(&["det", "torus", "--tail-tol", "0.5"]).status.code(), Some(1));
    assert_eq!(
        maptorus(&["det", "mapping-torus", "--base", "circle", "--isometry", "swap-shift"]).status.code(),
        Some(1)
    );
    let trunc = maptorus(&["det", "mapping-torus", "--isometry", "reflection", "--a", "0.001"]);
    assert_eq!(trunc.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&trunc.stderr).contains("tail bound"));
    assert_eq!(maptorus(&["det", "klein-bottle", "--lambda", "1"]).status.code(), Some(1));
    assert_eq!(maptorus(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_under_flags() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "a = 3.0\nrho = 0.7\nformat = \"json\"").unwrap();
    let path = f.path().to_str().unwrap();
    let from_file = json(&["det", "klein-bottle", "--config", path]);
    assert!(same(value(&from_file), maptorus::klein_bottle_det(3.0, 0.7).unwrap()));
    let overridden = json(&["det", "klein-bottle", "--config", path, "--a", "2.0"]);
    assert!(same(value(&overridden), maptorus::klein_bottle_det(2.0, 0.7).unwrap()));

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "unknown_key = 1").unwrap();
    let out = maptorus(&["det", "torus", "--config", bad.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn heat_and_threads() {
    let v = json(&["heat", "klein-minus-torus", "--t", "0.1"]);
    assert!(value(&v).abs() < 1e-8);
    let out = Command::new(env!("CARGO_BIN_EXE_maptorus"))
        .args(["det", "t2-phi"])
        .env("MAPTORUS_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let single = maptorus(&["det", "t2-phi"]);
    assert_eq!(stable(&out), stable(&single));
    let bad = Command::new(env!("CARGO_BIN_EXE_maptorus"))
        .args(["det", "torus"])
        .env("MAPTORUS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
