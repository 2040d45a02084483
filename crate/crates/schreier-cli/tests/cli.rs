use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn schreier(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schreier")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn member_example() {
    let out = schreier(&["member", "--xi", "w", "--set", "2,3,4,5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), r#"{"member":true}"#);
    let out = schreier(&["member", "--xi", "w", "--set", "1,2"]);
    assert_eq!(json(&out)["member"], false);
}

#[test]
fn modified_membership_matches_on_small_sets() {
    for set in ["1,2", "2,3,4", "3,4,5,6,7"] {
        let plain = json(&schreier(&["member", "--xi", "2", "--set", set]));
        let modified = json(&schreier(&["member", "--modified", "--xi", "2", "--set", set]));
        assert_eq!(plain, modified, "{set}");
    }
}

#[test]
fn tau_example() {
    let out = schreier(&["tau", "--xi", "1", "--set", "1,2,3,4,5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), r#"{"tau":3}"#);
}

#[test]
fn weak_summing_example() {
    let out = schreier(&["verify", "--suite", "weaksumming", "--xi", "1", "--horizon", "31"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["pass"], true);
    let naturals = r["checks"].as_array().unwrap().iter().find(|c| c["id"] == "weaksumming/1/naturals").unwrap();
    assert_eq!(naturals["computed"], "1");
    assert_eq!(r["seed"], 7);
}

#[test]
fn ordinal_fields() {
    let r = json(&schreier(&["ordinal", "--xi", "w^2+w*2"]));
    assert_eq!(r["cnf"], "w^2+w*2");
    assert_eq!(r["kind"], "limit");
    assert_eq!(r["fundamental"][0], "w^2+w+1");
    assert_eq!(r["r_set"].as_array().unwrap().len(), 4);
}

#[test]
fn partition_and_maximal() {
    let r = json(&schreier(&["partition", "--xi", "1", "--count", "3"]));
    assert_eq!(r["blocks"], serde_json::json!([[1], [2, 3], [4, 5, 6, 7]]));
    let r = json(&schreier(&["partition", "--xi", "1", "--set", "1,2,3,4,5"]));
    assert_eq!(r["blocks"].as_array().unwrap().len(), 3);
    let r = json(&schreier(&["maximal", "--xi", "1", "--set", "3,4,5"]));
    assert_eq!(r["maximal"], true);
}

#[test]
fn norms_from_inline_and_file_vectors() {
    let inline = r#"[[1,"1/2"],[3,"-1/4"],[4,"1"]]"#;
    let r = json(&schreier(&["norm", "--xi", "1", "--vector", inline]));
    assert_eq!(r["value"], "5/4");
    let path = scratch("vector.json");
    fs::write(&path, r#"{"entries":[[1,"1/2"],[3,"-1/4"],[4,"1"]]}"#).unwrap();
    let r = json(&schreier(&["norm", "--xi", "1", "--vector", path.to_str().unwrap()]));
    assert_eq!(r["value"], "5/4");
    let r = json(&schreier(&["dualnorm", "--xi", "1", "--vector", r#"[[2,"1"],[3,"1"]]"#]));
    assert_eq!(r["value"], "1");
}

#[test]
fn operator_commands() {
    let r = json(&schreier(&["op", "identity", "--xi", "1", "--zeta", "2", "--n", "5"]));
    assert_eq!(r["upper"], "5/3");
    assert_eq!(r["exact"], true);
    let r = json(&schreier(&["op", "norm", "--xi", "1", "--zeta", "1", "--matrix", r#"[[1,1,"1"],[2,2,"-1"]]"#]));
    assert_eq!(r["lower"], "1");
    let out = schreier(&["op", "dyadic", "--xi", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["injectivity"]["max_ratio"], "38");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(schreier(&["member", "--set", "1"]).status.code(), Some(2));
    assert_eq!(schreier(&["member", "--xi", "w^(w", "--set", "1"]).status.code(), Some(2));
    assert_eq!(schreier(&["tau", "--xi", "1", "--set", "0,2"]).status.code(), Some(2));
    assert_eq!(schreier(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
    assert_eq!(schreier(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn resource_caps_exit_three() {
    let caps = scratch("caps.json");
    fs::write(&caps, r#"{"cnf_depth": 1}"#).unwrap();
    let out = schreier(&["ordinal", "--xi", "w^w", "--caps", caps.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = schreier(&["verify", "--suite", "isometric", "--xi", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let r = json(&out);
    assert_eq!(r["resource_limited"], true);
    assert_eq!(r["pass"], false);
}

#[test]
fn corrupted_pair_records_expected_failure() {
    let out = schreier(&["verify", "--suite", "corrupted-pair", "--xi", "2", "--zeta", "1", "--horizon", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let check = &json(&out)["checks"][0];
    assert_eq!(check["expected_failure"], true);
    assert_eq!(check["pass"], true);
}

#[test]
fn empty_config_gives_empty_report() {
    let path = scratch("empty.json");
    fs::write(&path, "{}").unwrap();
    let out = schreier(&["report", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["checks"], serde_json::json!([]));
    assert_eq!(r["pass"], true);
}

#[test]
fn reports_are_byte_identical_and_persisted() {
    let path = scratch("report.json");
    fs::write(&path, r#"{"seed": 3, "suites": [{"suite": "tau", "xi": "2", "horizon": 10}, {"suite": "weaksumming", "xi": "w", "horizon": 40}]}"#)
        .unwrap();
    let saved = scratch("saved.json");
    let args = ["report", "--config", path.to_str().unwrap(), "--out", saved.to_str().unwrap()];
    let a = schreier(&args);
    let b = schreier(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(fs::read(&saved).unwrap(), a.stdout);
    let r = json(&a);
    let ids: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert_eq!(r["seed"], 3);
}

#[test]
fn default_suite_passes() {
    let out = schreier(&["verify", "--suite", "all"]);
    let r = json(&out);
    let failing: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["pass"] != true).collect();
    assert!(failing.is_empty(), "{failing:?}");
    assert_eq!(out.status.code(), Some(0));
}
