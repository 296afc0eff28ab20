use std::path::Path;
use std::process::{Command, Output};

fn bincover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bincover")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_then_run_static_lower_bound() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("slb.txt");
    let report = dir.path().join("slb.csv");
    let out = bincover(&["gen", "--family", "static-lb", "--n", "1", "--beta", "1", "--out", path(&stream)]);
    assert!(out.status.success(), "{out:?}");
    let out = bincover(&[
        "run",
        "--algo",
        "static",
        "--epsilon",
        "1/4",
        "--input",
        path(&stream),
        "--check-invariants",
        "--oracle-limit",
        "16",
        "--report",
        path(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("events: 12"));
    assert!(stdout.contains("ratio bound failures: 0"));
    let csv = std::fs::read_to_string(&report).unwrap();
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn opt_checks_phase_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("perfect.txt");
    assert!(bincover(&["gen", "--family", "perfect-lb", "--n", "2", "--out", path(&stream)]).status.success());
    let out = bincover(&["opt", "--input", path(&stream)]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.matches("matches annotation").count(), 3);
}

#[test]
fn random_dynamic_replay_with_departures() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("rand.txt");
    let out = bincover(&[
        "gen",
        "--family",
        "random",
        "--arrivals",
        "30",
        "--sizes",
        "bimodal-1/4",
        "--departure-rate",
        "0.3",
        "--max-live",
        "12",
        "--seed",
        "9",
        "--out",
        path(&stream),
    ]);
    assert!(out.status.success(), "{out:?}");
    let out = bincover(&[
        "run",
        "--algo",
        "dynamic",
        "--epsilon",
        "1/4",
        "--input",
        path(&stream),
        "--check-invariants",
        "--oracle-limit",
        "12",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn verify_claim_passes() {
    let out = bincover(&["verify-claim", "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().matches("holds").count(), 6);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(bincover(&["run", "--algo", "greedy"]).status.code(), Some(1));
    assert_eq!(bincover(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bincover(&["--help"]).status.code(), Some(0));
}

#[test]
fn departures_under_static_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("dep.txt");
    std::fs::write(&stream, "+ 1 1/2\n- 1\n").unwrap();
    let out = bincover(&["run", "--algo", "static", "--epsilon", "1/4", "--input", path(&stream)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("departures are not supported"));
}
