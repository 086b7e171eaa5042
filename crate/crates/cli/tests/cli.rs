use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = mse(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_code(out: &Output) -> String {
    assert!(!out.status.success());
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is a JSON error");
    v["error"]["code"].as_str().unwrap().to_string()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn enumerate_counts() {
    for (t, l, n) in [("5", "4", 6893), ("5", "2", 1024), ("3", "2", 8), ("4", "3", 113)] {
        let v = json_ok(&["enumerate", "--lists", t, "--max-order", l]);
        assert_eq!(v["count"], n);
    }
    let v = json_ok(&["enumerate", "--lists", "3", "--models"]);
    let models: Vec<&str> = v["models"].as_array().unwrap().iter().map(|m| m.as_str().unwrap()).collect();
    assert!(models.contains(&"[12,23]"));
    assert!(models.contains(&"[1,2,3]"));
}

#[test]
fn enumerate_rejects_bad_order() {
    let out = mse(&["enumerate", "--lists", "3", "--max-order", "3"]);
    assert_eq!(error_code(&out), "invalid_argument");
}

#[test]
fn fit_best_korea() {
    let v = json_ok(&["fit", "--data", "@korea"]);
    assert_eq!(v["best"]["model"], "[12,23]");
    let m = v["best"]["population_estimate"].as_f64().unwrap();
    assert!((m - 157.2).abs() < 0.05);
    let mut fails: Vec<&str> = v["fr_failures"].as_array().unwrap().iter().map(|m| m.as_str().unwrap()).collect();
    fails.sort();
    assert_eq!(fails, ["[12,13,23]", "[12,13]"]);
    assert_eq!(v["candidates"].as_array().unwrap().len(), 8);
}

#[test]
fn fit_failing_model_reports_nonexistence() {
    let v = json_ok(&["fit", "--data", "@korea", "--model", "[12,13]"]);
    assert_eq!(v["mle_exists"], false);
    assert_eq!(v["status"], "fr_failed");
    assert_eq!(v["population_estimate"], Value::Null);
}

#[test]
fn minus_infinity_rendered() {
    // table1_n2 has no case on both lists A and D.
    let v = json_ok(&["fit", "--data", "@table1_n2", "--model", "[12,14]"]);
    let ad = v["parameters"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["term"] == "14")
        .unwrap();
    assert_eq!(ad["estimate"], "-inf");
}

#[test]
fn lincoln_petersen_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "lp.csv", "first,second,count\n1,1,10\n1,0,20\n0,1,30\n");
    let v = json_ok(&["fit", "--data", &f, "--model", "[1,2]"]);
    let m = v["population_estimate"].as_f64().unwrap();
    assert!((m - 120.0).abs() < 1e-6, "{m}");
}

#[test]
fn unobserved_row_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.csv", "A,B,count\n1,0,4\n0,0,2\n");
    assert_eq!(error_code(&mse(&["fit", "--data", &f])), "unobserved_row");
}

#[test]
fn duplicates_warn_and_sum() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "dup.csv", "A,B,count\n1,0,4\n1,0,2\n1,1,3\n0,1,5\n");
    let out = mse(&["data", "--data", &f]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate"));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "A,B,count\n1,0,6\n0,1,5\n1,1,3\n");
}

#[test]
fn data_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("korea.csv");
    assert!(mse(&["data", "--data", "@korea", "--out", first.to_str().unwrap()]).status.success());
    let again = mse(&["data", "--data", first.to_str().unwrap()]);
    assert_eq!(std::fs::read(&first).unwrap(), again.stdout);
}

#[test]
fn list_selection() {
    let v = json_ok(&["fit", "--data", "@korea", "--lists", "B,C", "--model", "[1,2]"]);
    assert_eq!(v["dataset"]["lists"], serde_json::json!(["B", "C"]));
    assert_eq!(v["dataset"]["observed_cases"], 82);
    let out = mse(&["fit", "--data", "@korea", "--lists", "B,Z"]);
    assert_eq!(error_code(&out), "dataset");
}

#[test]
fn bootstrap_is_reproducible_across_workers() {
    let base = ["bootstrap", "--data", "@korea", "--ntop", "2", "--reps", "200", "--seed", "9"];
    let a = mse(&[&base[..], &["--workers", "1"]].concat());
    let b = mse(&[&base[..], &["--workers", "4"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["result"]["n_top"], 2);
    assert_eq!(v["result"]["seed"], 9);
    assert!(v["result"]["intervals"].as_array().unwrap().len() == 2);
    assert!(v.get("elapsed_seconds").is_none());
}

#[test]
fn sweep_has_one_row_per_ntop() {
    let v = json_ok(&["bootstrap", "--data", "@korea", "--sweep", "--reps", "100"]);
    let rows = v["sweep"]["rows"].as_array().unwrap();
    let n: Vec<u64> = rows.iter().map(|r| r["n_top"].as_u64().unwrap()).collect();
    assert_eq!(n, [1, 2, 3, 4, 5, 6]);
    assert_eq!(rows[0]["method"], "conditional");
    assert_eq!(rows[5]["method"], "all-models");
}

#[test]
fn method_specific_options_rejected() {
    for extra in [
        vec!["--method", "downhill", "--ntop", "3"],
        vec!["--method", "chisq", "--sweep"],
        vec!["--method", "bic", "--p-lo", "0.1"],
        vec!["--method", "bic", "--starts", "2"],
        vec!["--method", "chisq", "--sample-size", "capture"],
    ] {
        let out = mse(&[&["bootstrap", "--data", "@korea", "--reps", "10"][..], &extra[..]].concat());
        assert_eq!(error_code(&out), "invalid_argument", "{extra:?}");
    }
    let out = mse(&["bootstrap", "--data", "@korea", "--method", "chisq", "--p-lo", "0.5", "--p-hi", "0.2"]);
    assert_eq!(error_code(&out), "invalid_input");
}

#[test]
fn downhill_and_chisq_run() {
    let v = json_ok(&["bootstrap", "--data", "@korea", "--method", "downhill", "--reps", "50", "--starts", "2"]);
    assert_eq!(v["result"]["selected_model"], "[12,23]");
    assert_eq!(v["config"]["start_models"].as_array().unwrap().len(), 3);
    let out = mse(&["bootstrap", "--data", "@korea", "--method", "chisq", "--reps", "50"]);
    if out.status.success() {
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        let r = &v["result"];
        assert_eq!(r["used_replicates"].as_u64().unwrap() + r["excluded_replicates"].as_u64().unwrap(), 50);
    } else {
        assert!(["no_model_found", "all_replicates_excluded"].contains(&error_code(&out).as_str()));
    }
}

#[test]
fn diagnose_grid_rows() {
    let v = json_ok(&["diagnose", "--data", "@korea", "--reps", "100", "--grid", "1,2,8"]);
    let c = v["result"]["containment"].as_array().unwrap();
    assert_eq!(c.len(), 3);
    assert_eq!(c[2]["count"].as_u64().unwrap() + v["result"]["no_minimum"].as_u64().unwrap(), 100);
    let out = mse(&["diagnose", "--data", "@korea", "--reps", "20", "--format", "csv", "--table", "replicates"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.starts_with("replicate,rho,m1,m2"));
}

#[test]
fn text_and_csv_formats() {
    let out = mse(&["fit", "--data", "@korea", "--format", "text"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("model [12,23]"));
    let out = mse(&["enumerate", "--lists", "3", "--format", "csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 9);
}
