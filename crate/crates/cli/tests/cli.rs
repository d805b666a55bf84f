use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn vpa(args: &[&str], problem: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpa"))
        .args(args)
        .arg("--problem")
        .arg(problem)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn rabier_on_degenerate_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpa(&["rabier", "--at", "0,0,5"], &problem("degenerate_line.json"), dir.path());
    assert!(o.status.success());
    let r = report(dir.path());
    let v = r["result"]["value"].as_f64().unwrap();
    assert!((v - 3.5355339).abs() < 1e-6, "{}", v);
    assert_eq!(r["command"], "rabier");
    assert_eq!(r["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(r["config"]["tolerances"]["rank"].as_f64(), Some(1e-10));
}

#[test]
fn verdict_on_motzkin_guarantees_existence() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpa(&["verdict"], &problem("motzkin.json"), dir.path());
    assert!(o.status.success());
    let r = report(dir.path());
    assert_eq!(r["result"]["existence"], "guaranteed (evidence)");
    assert_eq!(r["ybar"], serde_json::json!([0.0, 0.0]));
    let entries = r["result"]["archive"]["entries"].as_array().unwrap();
    assert!(entries.iter().any(|e| {
        let x: Vec<f64> = serde_json::from_value(e["x"].clone()).unwrap();
        (x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4
    }));
    assert!(r["result"]["classification"]["caveat"].as_str().unwrap().contains("not a proof"));
}

#[test]
fn malformed_expression_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, r#"{"n": 2, "objectives": ["x1 + * x2"]}"#).unwrap();
    let o = vpa(&["eval", "--at", "1,2"], &file, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("position 5"), "{}", err);
}

#[test]
fn unknown_command_and_missing_point_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpa(&["optimize"], &problem("motzkin.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = vpa(&["mfcq"], &problem("motzkin.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = vpa(&["solve", "--ybar=1,2,3"], &problem("motzkin.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_point_is_an_operation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpa(&["rabier", "--at", "1,1,1"], &problem("degenerate_line.json"), dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_writes_archive_and_front() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpa(&["solve"], &problem("linear_segment.json"), dir.path());
    assert!(o.status.success());
    let front = std::fs::read_to_string(dir.path().join("front.csv")).unwrap();
    let mut lines = front.lines();
    assert_eq!(lines.next(), Some("f_1,f_2"));
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert!((f[0] + f[1] - 1.0).abs() < 1e-8);
    }
    let archive: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("archive.json")).unwrap()).unwrap();
    let first = &archive.as_array().unwrap()[0];
    for key in ["x", "f", "weights", "rabier_residual"] {
        assert!(first.get(key).is_some(), "missing {}", key);
    }
}

#[test]
fn trace_writes_csv_with_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("ray.json");
    std::fs::write(&points, "[[10, 0.1, -1], [100, 0.01, -1], [1000, 0.001, -1]]").unwrap();
    let o = vpa(
        &["trace", "--points", points.to_str().unwrap(), "--ybar=-1,2"],
        &problem("non_closed_section.json"),
        &dir.path().join("out"),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("radius,x_1,x_2,x_3,f_1,f_2,rabier,scaled_rabier,in_tangency,below_ybar")
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn eval_reports_values_and_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpa(&["eval", "--at", "1,1"], &problem("motzkin.json"), dir.path());
    assert!(o.status.success());
    let r = report(dir.path());
    assert_eq!(r["result"]["objective_values"], serde_json::json!([0.0, 0.0]));
    assert_eq!(r["result"]["feasibility"]["feasible"], true);
}
