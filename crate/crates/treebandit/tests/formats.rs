mod common;

use std::io::Cursor;
use std::path::Path;

use treebandit::config::{ConfigMap, EnvSpec, ExperimentConfig};
use treebandit::ingest::ingest_csv;
use treebandit::schema_file::SchemaDeclaration;
use treebandit::trace_io::*;
use treebandit_core::env::PreprocessSpec;
use treebandit_core::harness::{summarize, RegretStep, RegretTrace};

fn declaration(dir: &Path) -> SchemaDeclaration {
    let path = dir.join("schema.txt");
    std::fs::write(&path, common::SCHEMA).unwrap();
    SchemaDeclaration::load(&path).unwrap()
}

#[test]
fn ingestion_reports_and_drops_rare_classes() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("age,hours,colour,member,plan\n");
    for i in 0..10_000 {
        let label = if i < 3 { "platinum" } else { ["gold", "basic", "plus"][i % 3] };
        text.push_str(&format!("{},{},red,no,{label}\n", 20 + i % 50, i % 40));
    }
    let data = dir.path().join("d.csv");
    std::fs::write(&data, text).unwrap();
    let decl = declaration(dir.path());
    let (table, report) = ingest_csv(&data, &decl, &PreprocessSpec::default()).unwrap();
    assert_eq!((report.classes, report.features, report.rows), (3, 4, 9_997));
    assert_eq!(report.dropped_classes, ["platinum"]);
    assert_eq!(table.class_names(), ["basic", "gold", "plus"]);

    let keep_all = PreprocessSpec { rare_class_cutoff: 0.0, ..PreprocessSpec::default() };
    let (_, report) = ingest_csv(&data, &decl, &keep_all).unwrap();
    assert_eq!((report.classes, report.rows, report.dropped_rows), (4, 10_000, 0));
}

#[test]
fn clean_file_is_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = common::write_dataset(dir.path(), 2_000, 1, 0.0);
    let decl = SchemaDeclaration::load(schema).unwrap();
    let (table, report) = ingest_csv(&data, &decl, &PreprocessSpec::default()).unwrap();
    assert_eq!(report.rows, 2_000);
    assert_eq!(report.dropped_rows, 0);
    assert_eq!(table.remove_rare_classes(PreprocessSpec::default().rare_class_cutoff).unwrap(), table);
}

#[test]
fn bad_rows_name_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let decl = declaration(dir.path());
    let cases = [
        ("age,hours,colour,member,plan\n30,1,red,no,gold\n31,?,red,no,gold\n", ":3:", "missing"),
        ("age,hours,colour,member,plan\n30,1,red,no,gold\n31,2,purple,no,gold\n", ":3:", "unknown level"),
        ("age,hours,colour,member,plan\n30,1,red,no,gold\nabc,2,red,no,gold\n", ":3:", "not a number"),
        ("age,hours,colour,member,plan\n30,1,red,no,gold\n31,2,red,no\n", ":3", ""),
        ("age,hours,colour,plan\n30,1,red,gold\n", ":1:", "member"),
    ];
    for (text, line, what) in cases {
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, text).unwrap();
        let err = ingest_csv(&path, &decl, &PreprocessSpec::default()).unwrap_err().to_string();
        assert!(err.contains(line) && err.contains(what), "{err}");
    }
}

fn step(t: usize, action: usize, reward: bool, r: f64, cum: f64) -> RegretStep {
    RegretStep { t, action, reward, instant_regret: r, cumulative_regret: cum }
}

#[test]
fn trace_files() {
    let mut buf = Vec::new();
    write_traces(&mut buf, &[]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "replication,t,action,reward,instant_regret,cumulative_regret\n");

    let trace = RegretTrace {
        steps: vec![step(1, 0, true, 0.1, 0.1), step(2, 3, false, 0.2, 0.30000000000000004), step(3, 1, true, 0.0, 0.30000000000000004)],
        failure: None,
    };
    let mut buf = Vec::new();
    write_traces(&mut buf, std::slice::from_ref(&trace)).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("\n0,2,4,0,0.2,0.30000000000000004\n"));
    assert_eq!(read_traces(Cursor::new(buf), Path::new("t")).unwrap(), vec![trace.clone()]);

    let failed = RegretTrace { steps: vec![step(1, 2, false, 1.0, 1.0)], failure: Some("step 2: horizon exceeds dataset".into()) };
    let empty = RegretTrace { steps: vec![], failure: Some("policy has 3 actions, environment 4".into()) };
    let all = vec![trace, failed, empty];
    let mut buf = Vec::new();
    write_traces(&mut buf, &all).unwrap();
    assert_eq!(read_traces(Cursor::new(buf), Path::new("t")).unwrap(), all);

    let summary = summarize(&all).rows;
    let mut buf = Vec::new();
    write_summary(&mut buf, &summary).unwrap();
    assert_eq!(read_summary(Cursor::new(buf), Path::new("s")).unwrap(), summary);

    assert!(read_traces(Cursor::new("t,action\n"), Path::new("t")).is_err());
    let bad = "replication,t,action,reward,instant_regret,cumulative_regret\n0,1,0,1,0,0\n";
    assert!(read_traces(Cursor::new(bad), Path::new("t")).unwrap_err().to_string().contains("t:2:"));
}

#[test]
fn config_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "policy = tree-bootstrap\nhorizon = 100\nreps = 4\nfailure_threshold = none\nprior_injection = true\n").unwrap();
    let mut map = ConfigMap::load(&path).unwrap();
    map.set("dataset", "d.csv").unwrap();
    map.set("schema", "s.txt").unwrap();
    let c = ExperimentConfig::from_map(&map).unwrap();
    assert_eq!(c.env, EnvSpec::Dataset { data: "d.csv".into(), schema: "s.txt".into() });
    assert_eq!(c.tree.guard.failure_threshold, None);
    assert!(c.tree.guard.prior_injection);
    assert_eq!(c.replications, 4);
}
