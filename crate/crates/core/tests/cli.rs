use std::path::Path;
use std::process::{Command, Output};

use hcbb::bench::BenchmarkReport;
use hcbb::bnb::SolveReport;

const WORKED: &str = "var x cont [0,1]\nvar y bin\nmin (x - 0.6)^2 + 0.5*y\nst c: x - y <= 0\n";

fn hcbb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcbb")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_worked_instance_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "wk.prob", WORKED);
    let out = hcbb(&["solve", &file, "--algorithm", "hcbb-rb", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: SolveReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report.objective.unwrap() - 0.36).abs() < 1e-6);
    assert_eq!(report.n_node, 3);
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["algorithm"], "hcbb-rb");
}

#[test]
fn json_schema_is_stable_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "wk.prob", WORKED);
    let keys = |out: Output| {
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v.as_object().unwrap().keys().cloned().collect::<Vec<_>>()
    };
    let a = keys(hcbb(&["solve", &file, "--output", "json", "--algorithm", "bb"]));
    let b = keys(hcbb(&["solve", &file, "--output", "json", "--algorithm", "hcbb-fp"]));
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let infeasible = write(dir.path(), "inf.prob", "var y bin\nvar z bin\nmin y + z\nst a: y - 0.5 = 0\n");
    let root_fail = write(dir.path(), "root.prob", "var x cont [0,1]\nvar y bin\nmin x\nst a: x + y >= 3\n");
    let broken = write(dir.path(), "bad.prob", "var x cont [0,1\nmin x\n");
    let worked = write(dir.path(), "wk.prob", WORKED);

    assert_eq!(hcbb(&["solve", &infeasible]).status.code(), Some(1));
    assert_eq!(hcbb(&["solve", &root_fail]).status.code(), Some(1));
    assert_eq!(hcbb(&["solve", &worked, "--node-limit", "1"]).status.code(), Some(1));
    let missing = hcbb(&["solve", "missing.prob"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.prob"));
    assert_eq!(hcbb(&["solve", &broken]).status.code(), Some(2));
    assert_eq!(hcbb(&["solve", &worked, "--dt-min", "1.5"]).status.code(), Some(2));
    assert_eq!(hcbb(&["bench"]).status.code(), Some(2));
}

#[test]
fn start_from_file_and_random() {
    let dir = tempfile::tempdir().unwrap();
    let worked = write(dir.path(), "wk.prob", WORKED);
    let start = write(dir.path(), "start.txt", "0.9, 0.9\n");
    let bad_len = write(dir.path(), "short.txt", "0.9\n");
    for s in [format!("file:{start}"), "random:3".to_string()] {
        let out = hcbb(&["solve", &worked, "--start", &s, "--output", "json"]);
        assert_eq!(out.status.code(), Some(0), "{s}");
        let report: SolveReport = serde_json::from_slice(&out.stdout).unwrap();
        assert!((report.objective.unwrap() - 0.36).abs() < 1e-6);
    }
    assert_eq!(hcbb(&["solve", &worked, "--start", &format!("file:{bad_len}")]).status.code(), Some(2));
}

#[test]
fn oracle_command() {
    let dir = tempfile::tempdir().unwrap();
    let worked = write(dir.path(), "wk.prob", WORKED);
    let out = hcbb(&["oracle", &worked, "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["objective"].as_f64().unwrap() - 0.36).abs() < 1e-6);
    assert_eq!(v["assignment"], serde_json::json!([0]));
    assert_eq!(v["assignments"].as_array().unwrap().len(), 2);
}

#[test]
fn bench_three_way_table() {
    let out = hcbb(&["bench", "convex", "--algorithm", "bb,hcbb-fp,hcbb-rb", "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(
        header,
        ["instance", "algorithm", "start", "objective", "oracle", "rel_err", "n_node", "n_inf", "n_nlp", "t_post",
         "n_inf_post", "wall", "status"]
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 30);
    for alg in ["bb", "hcbb-fp", "hcbb-rb"] {
        assert_eq!(rows.iter().filter(|r| r.split_whitespace().nth(1) == Some(alg)).count(), 10);
    }
}

#[test]
fn bench_json_parses() {
    let out = hcbb(&["bench", "reactor", "--output", "json", "--algorithm", "hcbb-rb"]);
    assert_eq!(out.status.code(), Some(0));
    let report: BenchmarkReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert!(report.rows[0].rel_err.unwrap() <= 1e-6);
}
