use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn elusive(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elusive")).args(args).output().expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn construct_then_verify_degree_196() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("g.json");
    let out = elusive(&["construct", "sl2-quotient", "--p", "7", "--k", "2", "--out", arg(&bundle)]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("degree         196"));
    assert!(stdout.contains("57624"));
    let cert = dir.path().join("c.json");
    let out = elusive(&["verify", arg(&bundle), "--out", arg(&cert)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(c["overall"], "elusive");
}

#[test]
fn tampered_bundle_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("g.json");
    elusive(&["construct", "split-control", "--p", "7", "--out", arg(&bundle)]);
    let text = fs::read_to_string(&bundle).unwrap().replacen("\"order\": 57624", "\"order\": 57623", 1);
    fs::write(&bundle, text).unwrap();
    let out = elusive(&["verify", arg(&bundle)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hash"));
}

#[test]
fn split_control_meets_its_negative_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("s.json");
    elusive(&["construct", "split-control", "--p", "7", "--out", arg(&bundle)]);
    let out = elusive(&["verify", arg(&bundle)]);
    assert_eq!(out.status.code(), Some(0));
    let c: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(c["overall"], "not-elusive");
}

#[test]
fn changed_expectation_is_a_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("s.json");
    elusive(&["construct", "split-control", "--p", "7", "--out", arg(&bundle)]);
    let mut g: serde_json::Value = serde_json::from_str(&fs::read_to_string(&bundle).unwrap()).unwrap();
    g["metadata"]["expectation"]["elusive"] = serde_json::Value::Bool(true);
    g["metadata"]["expectation"]["non_elusive_primes"] = serde_json::json!([]);
    let g: elusive_core::constructions::ConstructedGroup = serde_json::from_value(g).unwrap();
    fs::write(&bundle, serde_json::to_string(&g.seal()).unwrap()).unwrap();
    let out = elusive(&["verify", arg(&bundle)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MISMATCH"));
}

#[test]
fn invalid_prime_is_a_parameter_error() {
    let out = elusive(&["construct", "sl2-quotient", "--p", "4", "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not an odd prime"));
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_parameter_is_an_error() {
    let out = elusive(&["construct", "a5-mixed"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn catalog_small_bounds() {
    let out = elusive(&["catalog", "--bound", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "value,family,factorization\n");
    let out = elusive(&["catalog", "--bound", "500"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let values: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    for v in ["12", "196", "225", "450"] {
        assert!(values.contains(&v), "{v}");
    }
    assert!(!values.contains(&"15"));
    let out = elusive(&["catalog", "--bound", "2000000000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn catalog_json_has_density() {
    let out = elusive(&["catalog", "--bound", "1000", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["density"]["count"], 36);
    assert_eq!(v["density"]["smallest_odd"], 225);
}

#[test]
fn witness_for_degree_225() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("a.json");
    let out = elusive(&["construct", "a5-mixed", "--stab", "Y", "--out", arg(&bundle)]);
    assert_eq!(out.status.code(), Some(0));
    for (e, prime) in [("U", 3), ("V", 5)] {
        let out = elusive(&["witness", arg(&bundle), "--E", e]);
        assert_eq!(out.status.code(), Some(0));
        let w: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(w["witness"]["prime"], prime);
        assert_eq!(w["witness"]["checks"]["fixed_points"], 0);
        assert_eq!(w["in_x"], false);
    }
}

#[test]
fn reference_array_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("r.json");
    elusive(&["construct", "reference", "--out", arg(&bundle)]);
    let out = elusive(&["verify", arg(&bundle)]);
    assert_eq!(out.status.code(), Some(0));
    let certs: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(certs.len(), 4);
}

#[test]
fn env_overrides_flags() {
    let out = Command::new(env!("CARGO_BIN_EXE_elusive"))
        .args(["construct", "split-control"])
        .env("ELUSIVE_P", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for i in 0..2 {
        let b = dir.path().join(format!("g{i}.json"));
        let c = dir.path().join(format!("c{i}.json"));
        let w = dir.path().join(format!("w{i}.json"));
        let workers = if i == 0 { "1" } else { "4" };
        elusive(&["construct", "sl2-quotient", "--p", "7", "--k", "2", "--out", arg(&b)]);
        elusive(&["verify", arg(&b), "--workers", workers, "--out", arg(&c)]);
        elusive(&["witness", arg(&b), "--E", "bottom", "--out", arg(&w)]);
        runs.push([&b, &c, &w].map(|p| fs::read(p).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    let a = elusive(&["catalog", "--bound", "100000"]);
    let b = elusive(&["catalog", "--bound", "100000"]);
    assert_eq!(a.stdout, b.stdout);
}
