use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_fraisse");
const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures");

fn run(args: &[&str]) -> (i32, Value) {
    run_env(args, None)
}

fn run_env(args: &[&str], budget: Option<&str>) -> (i32, Value) {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("FRAISSE_BUDGET");
    if let Some(b) = budget {
        cmd.env("FRAISSE_BUDGET", b);
    }
    let out: Output = cmd.output().expect("binary runs");
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().expect("exit code"), report)
}

fn fixture(name: &str) -> String {
    format!("{FIXTURES}/{name}")
}

fn scratch(name: &str, text: &str) -> String {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const T2_SIG: &str = r#""signature":{"relations":[{"name":"R","arity":2}]}"#;

#[test]
fn four_cycle_is_semigeneric() {
    let (code, r) = run(&["check-class", "--class", "semigeneric", "--input", &fixture("cycle4.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["member"], true);
    assert_eq!(r["seed"], 0);
    assert!(r["budget"]["per_query"].is_u64());
}

#[test]
fn non_member_fails_with_reason() {
    let (code, r) = run(&["check-class", "--class", "t2", "--input", &fixture("cycle4.json")]);
    assert_eq!(code, 1);
    assert!(r["result"]["certificate"].is_string());
}

#[test]
fn input_errors_exit_2() {
    let bad = scratch("bad.json", "{\"signature\":");
    assert_eq!(run(&["check-class", "--class", "t2", "--input", &bad]).0, 2);
    assert_eq!(run(&["check-class", "--class", "nonsense", "--input", &fixture("h4.json")]).0, 2);
    assert_eq!(run(&["check-class", "--class", "t2", "--input", "/nonexistent/x.json"]).0, 2);
    assert_eq!(run(&["no-such-command"]).0, 2);
}

#[test]
fn budget_exhaustion_exits_3() {
    let (code, r) = run_env(&["transversal", "--mode", "step2", "--steps", "0"], Some("0,0"));
    assert_eq!(code, 3);
    assert!(r["error"].as_str().unwrap().contains("budget"));
    assert_eq!(run_env(&["limit", "build", "--class", "t2", "--steps", "3"], Some("abc")).0, 2);
}

#[test]
fn amalgamate_tournaments() {
    let a = scratch("a.json", &format!(r#"{{{T2_SIG},"universe":[0]}}"#));
    let b = scratch("b.json", &format!(r#"{{{T2_SIG},"universe":[0,1],"relations":{{"R":[[0,1]]}}}}"#));
    let c = scratch("c.json", &format!(r#"{{{T2_SIG},"universe":[0,2],"relations":{{"R":[[2,0]]}}}}"#));
    let (code, r) = run(&["amalgamate", "--class", "t2", "--a", &a, "--b", &b, "--c", &c]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["result"]["amalgam"]["universe"], serde_json::json!([0, 1, 2]));
    assert_eq!(r["result"]["strong"], true);
}

#[test]
fn t3_witness_exhausts_at_bound_4() {
    let (code, r) = run(&["witness", "no-dense-conjugacy", "--structure", "t3", "--bound", "4"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["exhausted"]["bound"], 4);
    assert!(r["result"]["exhausted"]["note"].as_str().unwrap().contains("Alt_3"));
}

#[test]
fn circle_witness_and_realisation() {
    let (code, r) = run(&["witness", "no-dense-conjugacy", "--structure", "s2"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["witness"]["q"], "2/1");
    let cycle = scratch("s2_cycle.json", &r["result"]["witness"]["a_structure"].to_string());
    let (code, r2) = run(&["circle", "realize", "--input", &cycle, "--n", "2"]);
    assert_eq!(code, 0);
    assert_eq!(r2["result"]["rechecked"], true);
    let obstruction = scratch("s2_obstruction.json", &r["result"]["witness"]["obstructions"][0].to_string());
    let (code, r3) = run(&["circle", "realize", "--input", &obstruction, "--n", "2"]);
    assert_eq!(code, 1);
    assert!(!r3["result"]["refutations"].as_array().unwrap().is_empty());
}

#[test]
fn stationarity_witness_only_for_semigeneric() {
    let (code, r) = run(&["witness", "stationarity", "--class", "semigeneric"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["candidates"].as_array().unwrap().len(), 2);
    assert_eq!(run(&["witness", "stationarity", "--class", "t2"]).0, 1);
}

#[test]
fn srho_audit_reports_instance_counts() {
    let (code, r) = run(&["swir-audit", "--swir", "srho", "--stage", "200", "--window", "2,2,2"]);
    assert_eq!(code, 0);
    for a in r["result"]["axioms"].as_array().unwrap() {
        assert!(a["instances"].as_u64().unwrap() >= 50, "{a}");
    }
}

#[test]
fn mutated_relation_fails_with_certificates() {
    let (code, r) = run(&["swir-audit", "--swir", "tournament", "--stage", "120", "--window", "2,2,2,8", "--mutate"]);
    assert_eq!(code, 1);
    let checked: Vec<&Value> = r["result"]["revalidated"].as_array().unwrap().iter().filter(|v| !v.is_null()).collect();
    assert!(!checked.is_empty() && checked.iter().all(|v| v == &&Value::Bool(true)));
}

#[test]
fn reports_repeat_without_timing() {
    let args = ["--no-timing", "--seed", "3", "maximal-moves", "--class", "srho", "--stages", "2", "--steps", "40"];
    let (c1, r1) = run(&args);
    let (c2, r2) = run(&args);
    assert_eq!(c1, 0, "{r1}");
    assert_eq!((c1, &r1), (c2, &r2));
    assert_eq!(r1["seed"], 3);
    assert!(r1.get("timing_ms").is_none());
    assert!(run(&["p3", "audit", "--max-points", "2"]).1["timing_ms"].is_u64());
}

#[test]
fn transversal_and_p3_commands() {
    let (code, r) = run(&["transversal", "--mode", "step2", "--steps", "0", "--stages", "3"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["result"]["stages"].as_array().unwrap().len(), 3);
    let poset = scratch(
        "poset.json",
        r#"{"signature":{"relations":[{"name":"E","arity":2},{"name":"C0","arity":1},{"name":"C1","arity":1},{"name":"C2","arity":1}]},
            "universe":[0,1],"relations":{"E":[[0,1]],"C0":[[0]],"C2":[[1]]}}"#,
    );
    let (code, r) = run(&["p3", "twist", "--input", &poset]);
    assert_eq!(code, 0, "{r}");
    let twisted = scratch("twisted.json", &r["result"]["twist"].to_string());
    let (code, back) = run(&["p3", "untwist", "--input", &twisted]);
    assert_eq!(code, 0);
    assert_eq!(back["result"]["untwist"]["relations"]["E"], serde_json::json!([[0, 1]]));
}

#[test]
fn output_flag_writes_the_report() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("report.json");
    let _ = std::fs::remove_file(&path);
    let status = Command::new(BIN)
        .args(["limit", "build", "--class", "q2", "--steps", "20", "--output"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["result"]["member"], true);
}
