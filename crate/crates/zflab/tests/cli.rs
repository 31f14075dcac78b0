//! Exit codes, JSON reports and CSV tables of the `zflab` binary.

use std::path::PathBuf;
use std::process::Command;
use zflab::report::CheckReport;

fn zflab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_zflab")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("zflab-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

const QUICK: &[&str] = &["--grid-points", "6", "--nmax", "2", "--trials", "3"];

#[test]
fn passing_suite_exits_zero_and_writes_json() {
    let dir = scratch("pass");
    let report = dir.join("r.json");
    let mut args = vec!["--suite", "algebra", "--report", report.to_str().unwrap()];
    args.extend_from_slice(QUICK);
    let out = zflab(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: CheckReport = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep.suite, "algebra");
    assert!(rep.all_passed());
    assert_eq!(rep.environment["grid_points"], "6");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn failing_check_exits_one() {
    let mut args = vec!["--suite", "algebra", "--tol", "1e-300", "--s", "exponential:a=0.7"];
    args.extend_from_slice(QUICK);
    let out = zflab(&args);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn config_errors_exit_two() {
    for args in [
        vec!["--suite", "nonsense"],
        vec!["--suite", "algebra", "--grid-points", "1"],
        vec!["--suite", "algebra", "--s", "exponential"],
        vec!["--suite", "algebra", "--set", "grid.colour=blue"],
        vec!["--suite", "summability", "--alpha", "1.5"],
        vec!["--suite", "algebra", "--config", "/nonexistent/zflab.conf"],
        vec!["--no-such-flag"],
    ] {
        let out = zflab(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = scratch("config");
    let conf = dir.join("run.conf");
    std::fs::write(&conf, "[run]\nseed = 5\n[summability]\nalpha = 0.4\nmmax = 50\n").unwrap();
    let out = zflab(&["--suite", "summability", "--config", conf.to_str().unwrap(), "--seed", "9", "--report", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let rep: CheckReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep.environment["seed"], "9");
    assert_eq!(rep.environment["summability_mmax"], "50");
    assert_eq!(rep.checks.len(), 3);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn summability_is_informational_and_writes_csv() {
    let dir = scratch("csv");
    let out = zflab(&["--suite", "summability", "--alpha", "0.25", "--data-dir", dir.to_str().unwrap(), "--report", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let rep: CheckReport = serde_json::from_slice(&out.stdout).unwrap();
    let verdict = rep.checks.iter().find(|c| c.paper_anchor == "summability-verdict").unwrap();
    assert_eq!(verdict.details["verdict"], "Divergent");
    let text = std::fs::read_to_string(dir.join("summability.csv")).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["alpha", "m", "log_term", "log_ratio"]);
    assert_eq!(rdr.records().count(), 201);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn reruns_are_identical_apart_from_runtimes() {
    let run = || {
        let out = zflab(&["--suite", "conjecture-tm", "--set", "conjecture.m=6", "--set", "conjecture.samples=5000", "--report", "-"]);
        assert_eq!(out.status.code(), Some(0));
        let mut rep: CheckReport = serde_json::from_slice(&out.stdout).unwrap();
        for c in rep.checks.iter_mut() {
            c.runtime_ms = 0.0;
        }
        rep
    };
    assert_eq!(run(), run());
}
