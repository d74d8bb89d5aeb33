// Drive the `twowell` binary end to end: subcommands, output files, exit
// codes, and the thread-count environment variable.

use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twowell"))
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON document")
}

#[test]
fn eval_reports_the_identity_as_relaxed_to_zero() {
    let out = bin().args(["eval", "--matrix", "1", "0", "0", "1"]).output().unwrap();
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["schema_version"], "1");
    assert_eq!(doc["region"], "second_order");
    assert_eq!(doc["kqc_member"], true);
    assert!(doc["Wqc"].as_f64().unwrap() <= 1e-10);
    assert!(doc["W"].as_f64().unwrap() > 0.1);
}

#[test]
fn eval_formats_infinite_penalties() {
    let out = bin()
        .args(["eval", "--matrix", "2", "0", "0", "2", "--theta", "indicator_det1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["W"], "inf");
    assert_eq!(doc["Wqc"], "inf");
}

#[test]
fn eval_rejects_bad_matrices_with_usage_exit() {
    let missing = bin().args(["eval"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let non_finite = bin().args(["eval", "--matrix", "1", "0", "0", "nan"]).output().unwrap();
    assert_eq!(non_finite.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&non_finite.stderr).is_empty());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn phase_diagram_writes_grid_and_boundary_csv() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("slice.csv");
    let out = bin()
        .args(["phase-diagram", "--a-n", "11", "--b-n", "7", "--out"])
        .arg(&grid)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let body = std::fs::read_to_string(&grid).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("a,b,W,Wqc,region,kqc_member"));
    assert_eq!(body.lines().count(), 1 + 11 * 7);

    let curves = std::fs::read_to_string(dir.path().join("slice.csv.boundaries.csv")).unwrap();
    assert_eq!(curves.lines().next(), Some("curve,a,b"));
    assert!(curves.lines().skip(1).all(|l| l.starts_with("plus,") || l.starts_with("minus,")));
}

#[test]
fn phase_diagram_json_is_one_self_describing_document() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("slice.json");
    let out = bin()
        .args(["phase-diagram", "--a-n", "9", "--b-n", "9", "--format", "json", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());

    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], "1");
    assert_eq!(doc["lambda"], 1.5);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 81);
    let counted: u64 =
        doc["region_counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(counted, 81);
    assert!(doc["boundaries"]["plus"].as_array().unwrap().len() >= 64);
}

#[test]
fn phase_diagram_rejects_degenerate_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["phase-diagram", "--a-lo", "0", "--out"])
        .arg(dir.path().join("x.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn phase_diagram_rows_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let (one, four) = (dir.path().join("one.csv"), dir.path().join("four.csv"));
    for (path, threads) in [(&one, "1"), (&four, "4")] {
        let out = bin()
            .args(["phase-diagram", "--a-n", "13", "--b-n", "5", "--out"])
            .arg(path)
            .env("TWOWELL_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read_to_string(&one).unwrap(), std::fs::read_to_string(&four).unwrap());
}

#[test]
fn laminate_audit_passes_for_a_second_order_matrix() {
    let out = bin()
        .args(["laminate", "--matrix", "1", "0.1", "0.1", "1", "--theta", "zero"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["report"]["depth"], 2);
    assert_eq!(doc["laminate"]["type"], "split");
}

#[test]
fn verify_runs_the_battery_and_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = bin()
        .args(["verify", "--samples", "60", "--seed", "3", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("15/15 suites passed"), "stdout: {text}");

    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["all_passed"], true);
    assert_eq!(doc["suites"].as_array().unwrap().len(), 15);
}

#[test]
fn verify_exit_code_distinguishes_io_failures() {
    let out = bin()
        .args(["verify", "--samples", "40", "--out", "/nonexistent-dir/report.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
