//! End-to-end runs of the `coadjoint` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coadjoint"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_zero_duration_writes_the_initial_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": "toda-aks", "initial": {"chart": "ub", "u": [0.25], "b": [1.5]}, "duration": 0, "flows": [{"level": 1}]}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", arg(&cfg), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("flow_1_0.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "t,u1,b1,H1,H2,charpoly_c1,charpoly_c2");
    assert!(lines[1].starts_with("0,0.25,1.5,"));
}

#[test]
fn simulate_is_deterministic_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": "toda-aks", "sites": 2, "seed": 5, "duration": 0.2}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(
            run(&["simulate", "--config", arg(&cfg), "--out", arg(out)])
                .status
                .code(),
            Some(0)
        );
    }
    for name in ["flow_1_0.csv", "flow_2_0.csv"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap()
        );
    }
}

#[test]
fn simulate_conserves_h1_along_its_flow() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": "toda-aks", "initial": {"chart": "flaschka", "a": [0.5, 0, -0.5], "b": [1, 1]}, "flows": [{"level": 1}]}"#,
    );
    assert_eq!(
        run(&["simulate", "--config", arg(&cfg), "--out", arg(dir.path())])
            .status
            .code(),
        Some(0)
    );
    let text = std::fs::read_to_string(dir.path().join("flow_1_0.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let h1 = reader.headers().unwrap().iter().position(|h| h == "H1").unwrap();
    let values: Vec<f64> = reader.records().map(|r| r.unwrap()[h1].parse().unwrap()).collect();
    assert_eq!(values.len(), 1001);
    let drift = values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-9, "H1 drift {drift:e}");
}

#[test]
fn simulate_gaudin_splits_complex_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": "gaudin", "sites": 2, "duration": 0.01}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(
        run(&["simulate", "--config", arg(&cfg), "--out", arg(&out)])
            .status
            .code(),
        Some(0)
    );
    let files = std::fs::read_dir(&out).unwrap().count();
    assert_eq!(files, 4);
    let csv = std::fs::read_to_string(out.join("flow_2_1.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,A1_11_re,A1_11_im,"));
    assert!(header.contains("H1_re,H1_im,H2_re,H2_im,charpoly_c1_re"));
}

#[test]
fn verify_reports_and_forced_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": "toda-cartan", "checks": ["mcybe", "involution", "el-vs-lax"], "samples": 10}"#,
    );
    let out = dir.path().join("out");
    let ok = run(&["verify", "--config", arg(&cfg), "--out", arg(&out), "--seed", "3"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["model"], "toda-cartan");
    assert_eq!(report["seed"], 3);
    assert_eq!(report["checks"].as_array().unwrap().len(), 3);
    assert_eq!(report["checks"][0]["id"], "mcybe");
    let first = std::fs::read(out.join("report.json")).unwrap();
    run(&["verify", "--config", arg(&cfg), "--out", arg(&out), "--seed", "3"]);
    assert_eq!(first, std::fs::read(out.join("report.json")).unwrap());

    let failed = run(&["verify", "--config", arg(&cfg), "--tolerance-scale", "0"]);
    assert_eq!(failed.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&failed)).unwrap();
    for check in report["checks"].as_array().unwrap() {
        assert_eq!(check["pass"], false);
        assert!(check["max_residual"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in [
        "{not json",
        r#"{"model": "toda-aks", "step": -1}"#,
        r#"{"model": "gaudin", "checks": ["mcybe"]}"#,
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(dir.path(), &format!("bad{i}.json"), text);
        let o = run(&["verify", "--config", arg(&cfg)]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(run(&["verify"]).status.code(), Some(2));
}

#[test]
fn missing_files_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--config", arg(&dir.path().join("absent.json"))]);
    assert_eq!(o.status.code(), Some(4));
    let cfg = write_config(dir.path(), "c.json", r#"{"model": "toda-aks", "duration": 0}"#);
    let blocker = write_config(dir.path(), "file", "");
    let o = run(&["simulate", "--config", arg(&cfg), "--out", arg(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": "toda-aks", "initial": {"chart": "flaschka", "a": [40, 0, -40], "b": [1, 1]}, "duration": 5, "step": 0.05, "flows": [{"level": 2}]}"#,
    );
    let o = run(&["simulate", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn action_staircase_and_guards() {
    let dir = tempfile::tempdir().unwrap();
    let swap = r#""paths": {"first": [{"flow": {"level": 1}, "duration": 0.2}, {"flow": {"level": 2}, "duration": 0.2}],
                           "second": [{"flow": {"level": 2}, "duration": 0.2}, {"flow": {"level": 1}, "duration": 0.2}]}"#;
    let cfg = write_config(
        dir.path(),
        "swap.json",
        &format!(r#"{{"model": "toda-aks", "sites": 1, {swap}}}"#),
    );
    let o = run(&["action", "--config", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));

    let same = r#""paths": {"first": [{"flow": {"level": 1}, "duration": 0.3}], "second": [{"flow": {"level": 1}, "duration": 0.3}]}"#;
    let cfg = write_config(
        dir.path(),
        "same.json",
        &format!(r#"{{"model": "toda-cartan", {same}}}"#),
    );
    let out = dir.path().join("out");
    assert_eq!(
        run(&["action", "--config", arg(&cfg), "--out", arg(&out)])
            .status
            .code(),
        Some(0)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("action.json")).unwrap()).unwrap();
    assert_eq!(summary["difference"], 0.0);

    let apart = r#""paths": {"first": [{"flow": {"level": 1}, "duration": 0.3}], "second": [{"flow": {"level": 1}, "duration": 0.1}]}"#;
    let cfg = write_config(
        dir.path(),
        "apart.json",
        &format!(r#"{{"model": "toda-aks", {apart}}}"#),
    );
    let o = run(&["action", "--config", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("endpoints differ"));

    let cfg = write_config(dir.path(), "none.json", r#"{"model": "toda-aks"}"#);
    assert_eq!(run(&["action", "--config", arg(&cfg)]).status.code(), Some(2));
}
