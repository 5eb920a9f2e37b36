//! End-to-end runs of the `approxk` binary on the bundled scenarios.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_approxk"));
    c.env_remove("APPROXK_TOL");
    c
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("report is JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

fn entries(v: &Value) -> Vec<i64> {
    v["entries"].as_array().unwrap().iter().map(|x| x.as_i64().unwrap()).collect()
}

fn write_temp(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("approxk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn twisted_pair_report() {
    let out = run(&["run", scenario("twisted_pair.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(&out);
    assert_eq!(r["tool"], "approxk");
    assert_eq!(r["summary"]["failed"], 0);
    let iota = check(&r, "iota_lift_p_q");
    let mut class = entries(&iota["measured"]["class"]);
    class.sort();
    assert_eq!(class, vec![-1, 1]);
    assert_eq!(entries(&iota["measured"]["inverse_class"]), entries(&iota["measured"]["class"]).iter().map(|k| -k).collect::<Vec<_>>());
    let doubled = check(&r, "product_identity");
    let mut rhs = entries(&doubled["measured"]["check"]["rhs"]);
    rhs.sort();
    assert_eq!(rhs, vec![-2, 2]);
    assert_eq!(doubled["measured"]["check"]["intersection_gap"], 0);
}

#[test]
fn circle_split_report() {
    let out = run(&["run", scenario("circle_split.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(&out);
    let sigma = &check(&r, "factorization")["measured"]["cert"];
    assert!(sigma["x_in_d"]["residual"].as_f64().unwrap() <= 0.05);
    assert!(sigma["factor_in_c"]["residual"].as_f64().unwrap() <= 0.05);
    assert_eq!(sigma["recovered"], true);
    assert_eq!(sigma["winding_u"], 1);
}

#[test]
fn empty_scenario_passes() {
    let p = write_temp("empty.json", r#"{"schema": 1, "name": "empty", "ambient": {"kind": "matrix", "dim": 3}}"#);
    let out = run(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["summary"]["total"], 0);
    assert_eq!(r["passed"], true);
}

#[test]
fn schema_errors_exit_two() {
    let p = write_temp("bad.json", r#"{"schema": 1, "name": "bad", "ambient": {"kind": "torus"}}"#);
    let out = run(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let missing = run(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let usage = run(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_one_with_error_name() {
    let body = r#"{
        "schema": 1, "name": "unequal_classes",
        "ambient": {"kind": "matrix", "dim": 2},
        "algebras": {"c": {"kind": "diagonal"}, "d": {"kind": "diagonal"}},
        "elements": {"p": {"op": "unit", "n": 2, "i": 0, "j": 0}, "q": {"op": "unit", "n": 2, "i": 1, "j": 1}},
        "checks": [{"name": "mismatched", "kind": "iota_lift", "p": "p", "q": "q"}]
    }"#;
    let p = write_temp("fail.json", body);
    let out = run(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(check(&r, "mismatched")["error"]["name"], "IotaNotZero");
}

#[test]
fn reports_are_reproducible() {
    let s = scenario("twisted_pair.json");
    let a = run(&["run", s.to_str().unwrap()]);
    let b = run(&["run", s.to_str().unwrap()]);
    let c = run(&["run", s.to_str().unwrap(), "--jobs", "4"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let other_seed = run(&["run", s.to_str().unwrap(), "--seed", "99"]);
    assert_ne!(report(&a)["input_digest"], report(&other_seed)["input_digest"]);
}

#[test]
fn kind_filters() {
    let s = scenario("twisted_pair.json");
    let out = run(&["product-check", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["kind"] == "product"));
    assert_eq!(r["summary"]["total"], 3);
    let none = run(&["whitehead", s.to_str().unwrap()]);
    assert_eq!(none.status.code(), Some(2));
    let csv = run(&["boundary", s.to_str().unwrap(), "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("name,kind,passed,error"));
}

#[test]
fn tolerance_from_environment_and_flag() {
    let p = write_temp("tol.json", r#"{"schema": 1, "name": "tol", "ambient": {"kind": "matrix", "dim": 1}}"#);
    let env = bin().args(["run", p.to_str().unwrap()]).env("APPROXK_TOL", "1e-6").output().unwrap();
    assert_eq!(report(&env)["membership_tol"], 1e-6);
    let flag = bin().args(["run", p.to_str().unwrap(), "--tol", "1e-7"]).env("APPROXK_TOL", "1e-6").output().unwrap();
    assert_eq!(report(&flag)["membership_tol"], 1e-7);
}

#[test]
fn riesz_sweep_csv() {
    let out = run(&["sweep", "riesz", "--count", "50", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,seed,n,delta,c,distance,bound,passed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
    let parallel = run(&["sweep", "riesz", "--count", "50", "--seed", "3", "--jobs", "3"]);
    assert_eq!(text.as_bytes(), parallel.stdout.as_slice());
}

#[test]
fn invcut_and_uniformity_sweeps() {
    let inv = run(&["sweep", "invcut", "--count", "40", "--seed", "5"]);
    assert_eq!(inv.status.code(), Some(0));
    let text = String::from_utf8(inv.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("index,seed,n,delta,c,residual,bound,passed"));
    let uni = run(&["sweep", "uniformity", "--count", "12", "--grid", "240", "--seed", "5"]);
    assert_eq!(uni.status.code(), Some(0));
    let text = String::from_utf8(uni.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("index,m,delta_in,achieved,ratio,bound,passed"));
    let bad = run(&["sweep", "spectral"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("approxk-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let target = dir.join("report.json");
    let out = run(&["iota-lift", scenario("twisted_pair.json").to_str().unwrap(), "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(r["scenario"], "twisted_pair");
}
