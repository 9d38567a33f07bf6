mod common;

use std::path::Path;
use std::process::{Command, Output};

fn treebandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treebandit")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = common::write_dataset(dir.path(), 600, 3, 0.1);
    for policy in ["tree-heuristic", "linucb:alpha=0.1"] {
        let outs: Vec<_> = ["a", "b"].iter().map(|n| dir.path().join(format!("{policy}-{n}"))).collect();
        for out in &outs {
            let o = treebandit(&[
                "run", "--policy", policy, "--dataset", arg(&data), "--schema", arg(&schema),
                "--horizon", "200", "--reps", "3", "--seed", "7", "--out", arg(out),
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        for file in ["traces.csv", "summary.csv"] {
            assert_eq!(read(&outs[0].join(file)), read(&outs[1].join(file)), "{policy} {file}");
        }
        let config = |out: &Path| read(&out.join("config.txt")).lines().filter(|l| !l.starts_with("out =")).collect::<Vec<_>>().join("\n");
        assert_eq!(config(&outs[0]), config(&outs[1]));
        let traces = read(&outs[0].join("traces.csv"));
        assert_eq!(traces.lines().count(), 1 + 3 * 200);
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    let out = dir.path().join("out");
    std::fs::write(&conf, format!("policy = ts-free\nhorizon = 1000\nreps = 5\nout = {}\n", out.display())).unwrap();
    let o = treebandit(&["run", "--config", arg(&conf), "--horizon", "50", "--reps", "2", "--set", "seed=4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let written = read(&out.join("config.txt"));
    for line in ["policy = ts-free", "horizon = 50", "reps = 2", "seed = 4"] {
        assert!(written.contains(line), "{written}");
    }
    assert_eq!(read(&out.join("summary.csv")).lines().count(), 51);

    let o = treebandit(&["run", "--config", arg(&conf), "--set", "colour=blue"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn failed_replications_are_recorded_and_signalled() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = common::write_dataset(dir.path(), 100, 4, 0.0);
    let out = dir.path().join("out");
    let o = treebandit(&[
        "run", "--policy", "ts-free", "--dataset", arg(&data), "--schema", arg(&schema),
        "--horizon", "150", "--reps", "2", "--out", arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let traces = read(&out.join("traces.csv"));
    assert!(traces.contains("# replication 0 failed") && traces.contains("# replication 1 failed"), "{traces}");
    assert_eq!(traces.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 100);
}

#[test]
fn baseline_relative_and_theory_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = common::write_dataset(dir.path(), 1_500, 5, 0.0);
    let base = dir.path().join("base.csv");
    let o = treebandit(&["baseline", "--dataset", arg(&data), "--schema", arg(&schema), "--horizon", "300", "--out", arg(&base)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&base).lines().count(), 301);

    let out = dir.path().join("rel");
    let o = treebandit(&[
        "run", "--policy", "offline-tree", "--relative", "--dataset", arg(&data), "--schema", arg(&schema),
        "--horizon", "300", "--reps", "2", "--out", arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(&out.join("summary.csv"));
    assert!(summary.lines().skip(1).all(|l| l.split(',').nth(1) == Some("0")), "{summary}");

    for mode in ["lemma1", "lemma2", "theorem1", "slopes"] {
        let path = dir.path().join(format!("{mode}.csv"));
        let o = treebandit(&["theory", "--mode", mode, "--out", arg(&path)]);
        assert!(o.status.success(), "{mode}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(read(&path).lines().count() > 1);
    }
}

#[test]
fn sweep_writes_one_file_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = common::write_dataset(dir.path(), 400, 6, 0.1);
    let out = dir.path().join("sweep");
    let o = treebandit(&[
        "sweep", "--param", "alpha", "--grid", "0.01,1", "--policy", "linucb", "--dataset", arg(&data),
        "--schema", arg(&schema), "--horizon", "100", "--reps", "2", "--out", arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for file in ["traces_alpha=0.01.csv", "traces_alpha=1.csv", "summary_alpha=1.csv"] {
        assert!(out.join(file).exists(), "{file}");
    }
    assert_eq!(read(&out.join("sweep_summary.csv")).lines().count(), 3);

    let o = treebandit(&["sweep", "--param", "alpha", "--policy", "ts-free", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(1));
}
