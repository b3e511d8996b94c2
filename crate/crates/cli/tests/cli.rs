use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn streamforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamforge"))
        .args(args)
        .env_remove("STREAMFORGE_OUT")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scenarios_list_names_every_bundle() {
    let out = streamforge(&["scenarios", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["wordcount", "delaysweep", "partition"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn run_writes_every_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = streamforge(&["run", "wordcount", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "latency.csv",
        "delivery_matrix.csv",
        "port_throughput.csv",
        "events.log",
        "summary.json",
        "latency.svg",
        "throughput.svg",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn exported_scenario_runs_from_spec_path() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle");
    assert!(streamforge(&["scenarios", "export", "wordcount", s(&bundle)]).status.success());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let spec = bundle.join("experiment.graphml");
    assert!(streamforge(&["run", "--spec", s(&spec), "--out", s(&out_a)]).status.success());
    assert!(streamforge(&["run", "wordcount", "--out", s(&out_b)]).status.success());
    let read = |d: &Path| fs::read(d.join("latency.csv")).unwrap();
    assert_eq!(read(&out_a), read(&out_b));
}

#[test]
fn invalid_spec_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.graphml");
    fs::write(&spec, "<graphml><graph><node id=\"h1\"/><edge source=\"h1\" target=\"h9\"/></graph></graphml>").unwrap();
    let out = streamforge(&["run", "--spec", s(&spec), "--out", s(&dir.path().join("o"))]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn unknown_scenario_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = streamforge(&["run", "no-such", "--out", s(dir.path())]);
    assert!(!out.status.success());
}

#[test]
fn singleton_sweep_matches_a_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain");
    let swept = dir.path().join("swept");
    assert!(streamforge(&["run", "delaysweep", "--out", s(&plain)]).status.success());
    let out = streamforge(&["sweep", "delaysweep", "--out", s(&swept), "--sweep", "link:h2-s1.lat=10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(swept.join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    let point = fs::read_dir(&swept)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.join("latency.csv").is_file())
        .unwrap();
    let read = |d: &Path| fs::read(d.join("latency.csv")).unwrap();
    assert_eq!(read(&point), read(&plain));
}

#[test]
fn sweep_rejects_unknown_attribute() {
    let dir = tempfile::tempdir().unwrap();
    let out = streamforge(&["sweep", "wordcount", "--out", s(dir.path()), "--sweep", "link:nope.lat=1"]);
    assert!(!out.status.success());
}
