use std::path::Path;
use std::process::{Command, Output};

use dynconn::harness::run::{run_engine, RunConfig};
use dynconn::harness::workload::{generate_workload, Mix, Workload};
use dynconn::layered::StackConfig;

fn dynconn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynconn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn insert_then_query() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "w.txt", "I 0 1\nQ 0 1\n");
    for mode in ["layered", "boosted", "oracle", "differential"] {
        let o = dynconn(&["run", "--n", "2", "--workload", &f, "--mode", mode]);
        assert_eq!(o.status.code(), Some(0), "{mode}: {}", stderr(&o));
        assert_eq!(stdout(&o), "1\n", "{mode}");
    }
}

#[test]
fn insert_delete_query() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "w.txt", "n 2\nI 0 1\nD 0 1\nQ 0 1\n");
    let o = dynconn(&["run", "--workload", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0\n");
}

#[test]
fn duplicate_insert_cites_line() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "w.txt", "I 0 1\nI 0 1\n");
    let o = dynconn(&["run", "--n", "2", "--workload", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("duplicate insert at line 2"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("n 4\nX 0 1\n", "line 2"),
        ("n 4\n# note\nD 0 1\n", "delete of absent edge at line 3"),
        ("n 4\nI 2 2\n", "self-loop insert at line 2"),
        ("n 4\nQ 0 9\n", "out of range"),
        ("I 0 1\n", "missing `n <count>` header"),
    ] {
        let f = write(dir.path(), "w.txt", text);
        let o = dynconn(&["run", "--workload", &f]);
        assert_eq!(o.status.code(), Some(1), "{text:?}");
        assert!(stderr(&o).contains(needle), "{text:?}: {}", stderr(&o));
    }
    let o = dynconn(&["run", "--workload", "/nonexistent/file"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stats_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "w.txt",
        "n 3\nI 0 1\nI 1 2\nQ 0 2\nD 0 1\nQ 0 2\n",
    );
    let out = dir.path().join("stats.json");
    let o = dynconn(&[
        "run",
        "--workload",
        &f,
        "--mode",
        "differential",
        "--check-cadence",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1\n0\n");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["queries"]["checked"], 2);
    assert_eq!(v["invariants"]["checks"], 5);
    assert_eq!(v["invariants"]["structural_violations"], 0);
}

#[test]
fn fuzz_output_is_deterministic() {
    let args = ["fuzz", "--n", "64", "--ops", "3000", "--seed", "17"];
    let a = dynconn(&args);
    let b = dynconn(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["config"]["check_cadence"], 1);
    assert_eq!(v["invariants"]["checks"], 3000);
}

#[test]
fn fuzz_empty_workload() {
    let o = dynconn(&["fuzz", "--ops", "0", "--fail-on-mismatch"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["ops"]["inserts"], 0);
    assert_eq!(v["queries"]["one_sided_mismatches"], 0);
}

#[test]
fn saved_workload_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("w.txt");
    let saved = saved.to_str().unwrap();
    let a = dynconn(&[
        "fuzz",
        "--n",
        "48",
        "--ops",
        "2000",
        "--seed",
        "5",
        "--save-workload",
        saved,
    ]);
    let b = dynconn(&["fuzz", "--n", "48", "--seed", "5", "--workload", saved]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    // generate -> save -> load -> replay equals generate -> replay
    let w = generate_workload(48, 2000, Mix::default(), 5).unwrap();
    let loaded = Workload::parse(&std::fs::read_to_string(saved).unwrap()).unwrap();
    assert_eq!(loaded, w);
    let config = RunConfig::new(StackConfig::new(48, 5));
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let sx = run_engine(&w, &config, |q| x.push(q)).unwrap();
    let sy = run_engine(&loaded, &config, |q| y.push(q)).unwrap();
    assert_eq!(x, y);
    assert_eq!(sx, sy);

    let r = dynconn(&["run", "--workload", saved, "--seed", "5"]);
    assert_eq!(r.status.code(), Some(0));
    let expect: String = x.iter().map(|&q| if q { "1\n" } else { "0\n" }).collect();
    assert_eq!(stdout(&r), expect);
}

#[test]
fn bench_single_cell() {
    let o = dynconn(&[
        "bench",
        "--n",
        "64",
        "--mode",
        "layered",
        "--ops",
        "500",
        "--no-timing",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    assert!(v["rows"][0].get("timing").is_none());
    let timed = dynconn(&["bench", "--n", "64", "--mode", "layered", "--ops", "500"]);
    let v: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(v["rows"][0]["timing"]["delete"]["count"].as_u64().unwrap() > 0);
}

#[test]
fn success_command() {
    let o = dynconn(&[
        "success",
        "--n",
        "128",
        "--cut-sizes",
        "1,0,8",
        "--trials",
        "200",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"][0]["rate"], 1.0);
    assert_eq!(v["rows"][1]["rate"], 0.0);
    let o = dynconn(&["success", "--n", "8", "--cut-sizes", "100"]);
    assert_eq!(o.status.code(), Some(1));
}
