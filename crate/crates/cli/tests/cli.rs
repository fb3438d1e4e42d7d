use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Run the binary in `dir` with the data directory set; returns the exit code.
fn run(dir: &Path, args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_chevlift"))
        .args(args)
        .current_dir(dir)
        .env("CHEVLIFT_DATA_DIR", data_dir())
        .output()
        .expect("binary runs");
    out.status.code().expect("exit code")
}

fn report(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(name)).expect("report written");
    serde_json::from_str(&text).expect("report is JSON")
}

fn assert_consistent(r: &Value, code: i32) {
    assert_eq!(r["schema_version"], 1);
    let failed = r["failed"].as_u64().unwrap();
    assert_eq!(code == 0, failed == 0 && r["error"].is_null(), "exit {code} with report {r}");
}

#[test]
fn matrix_identity_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(dir.path(), &["check", "matrix-identity", "--p", "5", "--m", "3", "--samples", "100", "--report", "r.json"]);
    assert_eq!(code, 0);
    let r = report(dir.path(), "r.json");
    assert_consistent(&r, code);
    assert_eq!(r["results"][0]["exact_by_size"].as_array().unwrap().len(), 8);
}

#[test]
fn f4_example_reports_a6_multiplicities() {
    let dir = tempfile::tempdir().unwrap();
    let tables = data_dir().join("atlas");
    let code = run(dir.path(), &["examples", "f4", "--p", "7", "--tables", tables.to_str().unwrap(), "--report", "r.json"]);
    assert_eq!(code, 0);
    let r = report(dir.path(), "r.json");
    assert_consistent(&r, code);
    let a6 = r["results"].as_array().unwrap().iter().find(|x| x["group"] == "A6").unwrap();
    let m = &a6["report"]["multiplicities"];
    assert_eq!((m[3].as_i64(), m[4].as_i64(), m[6].as_i64()), (Some(1), Some(3), Some(2)));
    assert_eq!(a6["report"]["multiplicity_free"], false);
    // 7 divides the order of PSL2(13), which is reported as skipped
    let l2 = r["results"].as_array().unwrap().iter().find(|x| x["group"] == "L2_13").unwrap();
    assert!(l2["skipped"].is_string());
}

#[test]
fn lift_example_passes_every_level() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(dir.path(), &["selmer", "lift", "--model", "toy_a1.json", "--max-precision", "5", "--report", "r.json"]);
    assert_eq!(code, 0);
    let r = report(dir.path(), "r.json");
    assert_consistent(&r, code);
    let levels = r["results"]["lift"]["levels"].as_array().unwrap();
    assert_eq!(levels.iter().map(|l| l["level"].as_u64().unwrap()).collect::<Vec<_>>(), vec![3, 4, 5]);
}

#[test]
fn unknown_subcommand_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["selmer", "nope"]), 2);
    assert_eq!(run(dir.path(), &["frobnicate"]), 2);
}

#[test]
fn invalid_config_exits_three_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(dir.path(), &["spaces", "--p", "five", "--report", "r.json"]);
    assert_eq!(code, 3);
    assert_eq!(report(dir.path(), "r.json")["status"], "invalid-config");
    assert_eq!(run(dir.path(), &["selmer", "balance", "--model", "missing.json", "--report", "m.json"]), 3);
    assert_eq!(report(dir.path(), "m.json")["status"], "invalid-config");
    std::fs::write(dir.path().join("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(run(dir.path(), &["spaces", "--config", "bad.conf", "--report", "c.json"]), 3);
}

#[test]
fn failed_assertion_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    // 3 divides both group orders, so nothing can be checked
    let code = run(dir.path(), &["examples", "f4", "--p", "3", "--report", "r.json"]);
    assert_eq!(code, 4);
    let r = report(dir.path(), "r.json");
    assert_consistent(&r, code);
    assert_eq!(r["status"], "fail");
}

#[test]
fn run_error_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    // the ledger place of this model carries no local model to lift
    let code = run(dir.path(), &["selmer", "lift", "--model", "a1_p13.json", "--max-precision", "4", "--report", "r.json"]);
    assert_eq!(code, 4);
    let r = report(dir.path(), "r.json");
    assert_eq!(r["status"], "error");
    assert!(r["error"].as_str().unwrap().contains("no local model"));
}

#[test]
fn identical_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["check", "stability", "--types", "A2", "--p", "7", "--m", "3", "--seed", "5"],
        vec!["selmer", "kill", "--model", "a1_p13.json", "--seed", "3"],
    ] {
        let mut first = args.clone();
        first.extend(["--report", "r.json"]);
        assert_eq!(run(dir.path(), &first), 0);
        let a = std::fs::read(dir.path().join("r.json")).unwrap();
        assert_eq!(run(dir.path(), &first), 0);
        let b = std::fs::read(dir.path().join("r.json")).unwrap();
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "# grid\np = 7\nm = 3\nsamples = 5\nsize = 2\nreport = from-file.json\n")
        .unwrap();
    let code = run(dir.path(), &["check", "matrix-identity", "--config", "run.conf", "--p", "5"]);
    assert_eq!(code, 0);
    let r = report(dir.path(), "from-file.json");
    assert_eq!(r["config"]["primes"], serde_json::json!([5]));
    assert_eq!(r["config"]["precisions"], serde_json::json!([3]));
    assert_eq!(r["config"]["samples"], 5);
    assert_eq!(r["results"][0]["exact_by_size"], serde_json::json!([5, 5]));
}

#[test]
fn every_subcommand_passes_on_a_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["check", "duality", "--types", "B2", "--p", "5", "--m", "3"],
        vec!["spaces", "--types", "G2", "--p", "7", "--m", "3", "--alpha", "0", "--f-degree", "2"],
        vec!["decompose", "--types", "A2,G2", "--p", "13"],
        vec!["cohomology", "--group", "a6", "--degree", "1", "--p", "5,7"],
        vec!["cohomology", "--group", "cyclic", "--size", "10", "--degree", "1", "--p", "5"],
        vec!["oddness", "--types", "A2,F4"],
        vec!["examples", "sl2", "--types", "D4", "--p", "13"],
        vec!["examples", "ntorus", "--types", "B2"],
        vec!["levi-bound", "--types", "A2", "--samples", "20"],
        vec!["selmer", "balance", "--model", "a1_p13.json"],
        vec!["selmer", "doubling", "--model", "toy_fp.json", "--samples", "2", "--exhaustive"],
    ];
    for args in runs {
        let mut a = args.clone();
        a.extend(["--report", "r.json"]);
        let code = run(dir.path(), &a);
        let r = report(dir.path(), "r.json");
        assert_eq!(code, 0, "{args:?}: {r}");
        assert_consistent(&r, code);
        assert!(r["passed"].as_u64().unwrap() > 0, "{args:?}");
    }
}
