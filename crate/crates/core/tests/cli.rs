//! End-to-end runs of the `twold` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twold"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("twold-cli-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(args: &[&str]) -> (i32, Value) {
    let out = bin().arg("--json").args(args).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    assert_eq!(v["schema"], "twold-report/1");
    assert_eq!(v["exit_code"], out.status.code().unwrap());
    (out.status.code().unwrap(), v)
}

fn example(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(format!("{name}.json"));
    let p = path.to_str().unwrap().to_string();
    let mut args = vec!["example", name, "--out", &p];
    args.extend_from_slice(extra);
    assert_eq!(run(&args).status.code(), Some(0));
    p
}

fn check<'a>(v: &'a Value, name: &str) -> &'a Value {
    v["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn verify_passes_on_c3() {
    let dir = scratch("c3");
    let f = example(&dir, "c3_permutation", &[]);
    let (code, v) = report(&["verify", &f]);
    assert_eq!(code, 0);
    assert!(v["passed"].as_bool().unwrap());
    assert!(check(&v, "covariance_automorphic")["passed"].as_bool().unwrap());
}

#[test]
fn corrupted_twist_fails_the_twisted_check() {
    let dir = scratch("corrupt");
    let f = example(&dir, "c3_permutation", &[]);
    let mut spec: Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    let name = spec["twists"][0]["op"]["matrix"].as_str().unwrap().to_string();
    // U₀₁ = I becomes diag(1, 1, −1).
    spec["matrices"][&name][2][2] = serde_json::json!([-1.0, 0.0]);
    let bad = dir.join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&spec).unwrap()).unwrap();
    let (code, v) = report(&["verify", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(!check(&v, "twisted")["passed"].as_bool().unwrap());
    let human = String::from_utf8(run(&["verify", bad.to_str().unwrap()]).stdout).unwrap();
    assert!(human.contains("[FAIL] twisted"), "{human}");
}

#[test]
fn missing_matrix_is_a_schema_error_with_path() {
    let dir = scratch("missing");
    let f = example(&dir, "c3_permutation", &[]);
    let mut spec: Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    spec["coords"][0][0]["matrix"] = Value::String("nope".into());
    let bad = dir.join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&spec).unwrap()).unwrap();
    let (code, v) = report(&["verify", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    let e = v["error"].as_str().unwrap();
    assert!(e.contains("coords[0][0]") && e.contains("nope"), "{e}");
}

#[test]
fn malformed_json_and_unknown_fields_exit_two() {
    let dir = scratch("malformed");
    let f = dir.join("x.json");
    std::fs::write(&f, "{ not json").unwrap();
    assert_eq!(run(&["verify", f.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&f, r#"{"schema":"twisted-tuple/1","rank":1,"bogus":true}"#).unwrap();
    assert_eq!(run(&["verify", f.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--window", "x", f.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn wold_polydisc_dims_follow_lattice_counts() {
    let dir = scratch("wold");
    let f = example(&dir, "polydisc", &["--n", "2"]);
    let (code, v) = report(&["wold", &f, "--window", "4"]);
    assert_eq!(code, 0);
    let dims = &v["data"]["dims_by_total_degree"];
    for d in 0..=4u64 {
        assert_eq!(dims["{0,1}"][d.to_string()], d + 1);
    }
    for a in ["{}", "{0}", "{1}"] {
        assert!(dims[a].as_object().unwrap().is_empty(), "{a}");
    }
    assert!(v["data"].get("bases").is_none());
    let (_, v) = report(&["wold", &f, "--window", "2", "--emit-bases"]);
    assert_eq!(v["data"]["bases"]["{0,1}"]["basis"].as_object().unwrap().len(), 9);
}

#[test]
fn wold_counterexample_prints_witness() {
    let dir = scratch("witness");
    let f = example(&dir, "bilateral_counterexample", &[]);
    let out = run(&["wold", &f]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("existence: false"), "{text}");
    assert!(text.contains("witness:") && text.contains("δ(-1)"), "{text}");
    let (_, v) = report(&["wold", &f]);
    assert!(v["data"].get("summands").is_none(), "summands must be suppressed");
    assert_eq!(v["data"]["existence"]["witness"]["i"], 1);
}

#[test]
fn wold_bilateral_shift_is_all_unitary() {
    let dir = scratch("k1");
    let f = example(&dir, "bilateral_shift", &[]);
    let (code, v) = report(&["wold", &f, "--window", "3"]);
    assert_eq!(code, 0);
    let s = v["data"]["summands"].as_array().unwrap();
    let total = |label: &str| s.iter().find(|x| x["label"] == label).unwrap()["total_dim"].as_u64().unwrap();
    assert_eq!(total("{}"), 7);
    assert_eq!(total("{0}"), 0);
}

#[test]
fn model_writes_a_spec_that_verifies() {
    let dir = scratch("model");
    let f = example(&dir, "fock_model", &["--k", "2", "--subset", "0"]);
    let out = dir.join("model.json");
    let (code, v) = report(&["model", &f, "--window", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["data"]["subset"], serde_json::json!([0]));
    assert_eq!(run(&["verify", out.to_str().unwrap(), "--window", "4"]).status.code(), Some(0));
}

#[test]
fn model_on_a_vanishing_summand_exits_one() {
    let dir = scratch("degenerate");
    let f = example(&dir, "bilateral_shift", &[]);
    let (code, v) = report(&["model", &f, "--subset", "0"]);
    assert_eq!(code, 1);
    assert!(v["error"].as_str().unwrap().contains("degenerate"));
    assert_eq!(report(&["model", &f]).0, 2, "no subset anywhere is an input error");
}

#[test]
fn extend_examples() {
    let dir = scratch("extend");
    let f = example(&dir, "polydisc", &["--n", "2"]);
    let out = dir.join("ext.json");
    let (code, v) = report(&["extend", &f, "--window", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{v}");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    let ext: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(ext["backend"], "lattice-signed");

    let f = example(&dir, "doubly_noncommuting", &[]);
    let (code, v) = report(&["extend", &f, "--window", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["data"]["doubly_twisted"], true);

    let f = example(&dir, "bilateral_counterexample", &[]);
    let (code, v) = report(&["extend", &f]);
    assert_eq!(code, 1);
    assert!(v["error"].as_str().unwrap().contains("hypothesis"));
}

#[test]
fn braid_reports_every_triple() {
    let dir = scratch("braid");
    let f = example(&dir, "polydisc", &["--n", "3"]);
    let (code, v) = report(&["braid", &f, "--n", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["data"]["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn stdin_and_canon_roundtrip() {
    let dir = scratch("stdin");
    let f = example(&dir, "m2_hardy", &[]);
    let original = std::fs::read_to_string(&f).unwrap();
    for flag in ["-", "--stdin"] {
        let mut child = bin().args(["canon", flag]).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
        std::io::Write::write_all(child.stdin.as_mut().unwrap(), original.as_bytes()).unwrap();
        let out = child.wait_with_output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(String::from_utf8(out.stdout).unwrap(), original);
    }
}

#[test]
fn example_is_deterministic_per_seed() {
    let a = run(&["example", "fock_model", "--seed", "3"]).stdout;
    let b = run(&["example", "fock_model", "--seed", "3"]).stdout;
    let c = run(&["example", "fock_model", "--seed", "4"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
    let list = String::from_utf8(run(&["example", "list"]).stdout).unwrap();
    assert!(list.lines().any(|l| l == "bilateral_counterexample"));
    assert_eq!(run(&["example", "nonesuch"]).status.code(), Some(2));
}
