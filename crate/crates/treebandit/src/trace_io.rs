//! Delimited-text traces and summaries.
//!
//! Trace files have one row per (replication, step) with the header
//! `replication,t,action,reward,instant_regret,cumulative_regret`; actions are written
//! 1-based and rewards as 0/1. A replication that aborted is followed by a
//! `# replication <i> failed: <message>` line. Summary files have one row per step with the
//! header `t,mean_cumulative_regret,std_error,replications`.

use std::io::{BufRead, Write};
use std::path::Path;

use treebandit_core::harness::{RegretStep, RegretTrace, SummaryRow};

use crate::error::{io, parse_error, Error, Result};

pub const TRACE_HEADER: [&str; 6] = ["replication", "t", "action", "reward", "instant_regret", "cumulative_regret"];
pub const SUMMARY_HEADER: [&str; 4] = ["t", "mean_cumulative_regret", "std_error", "replications"];
const FAILURE_PREFIX: &str = "# replication ";

fn csv_write_err(source: csv::Error) -> Error {
    Error::Csv { path: "<output>".into(), source }
}

fn io_out(source: std::io::Error) -> Error {
    Error::Io { path: "<output>".into(), source }
}

/// Rows of one record batch as CSV text.
fn csv_block(rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(csv_write_err)?;
    }
    w.into_inner().map_err(|e| io_out(e.into_error()))
}

pub fn write_traces<W: Write>(mut out: W, traces: &[RegretTrace]) -> Result<()> {
    out.write_all(&csv_block([TRACE_HEADER.map(String::from).to_vec()])?).map_err(io_out)?;
    for (r, trace) in traces.iter().enumerate() {
        let rows = trace.steps.iter().map(|s| {
            vec![
                r.to_string(),
                s.t.to_string(),
                (s.action + 1).to_string(),
                u8::from(s.reward).to_string(),
                s.instant_regret.to_string(),
                s.cumulative_regret.to_string(),
            ]
        });
        out.write_all(&csv_block(rows)?).map_err(io_out)?;
        if let Some(message) = &trace.failure {
            writeln!(out, "{FAILURE_PREFIX}{r} failed: {}", message.replace('\n', " ")).map_err(io_out)?;
        }
    }
    out.flush().map_err(io_out)
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_write_err)?;
    for row in rows {
        w.write_record([
            row.t.to_string(),
            row.mean_cumulative_regret.to_string(),
            row.std_error.to_string(),
            row.replications.to_string(),
        ])
        .map_err(csv_write_err)?;
    }
    w.flush().map_err(io_out)
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, record: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = record.get(i).ok_or_else(|| parse_error(path, line, format!("missing `{name}`")))?;
    raw.parse().map_err(|_| parse_error(path, line, format!("`{name}`: cannot parse `{raw}`")))
}

fn check_header(path: &Path, first: Option<String>, expected: &[&str]) -> Result<()> {
    match first {
        Some(h) if h.trim_end() == expected.join(",") => Ok(()),
        _ => Err(parse_error(path, 1, format!("expected header `{}`", expected.join(",")))),
    }
}

/// Reads a trace file back; `path` is only used in error messages.
pub fn read_traces<R: BufRead>(input: R, path: &Path) -> Result<Vec<RegretTrace>> {
    let mut lines = input.lines();
    check_header(path, lines.next().transpose().map_err(io(path))?, &TRACE_HEADER)?;
    let mut traces: Vec<RegretTrace> = Vec::new();
    for (i, line) in lines.enumerate() {
        let number = i + 2;
        let line = line.map_err(io(path))?;
        if let Some(rest) = line.strip_prefix(FAILURE_PREFIX) {
            let (r, message) = rest
                .split_once(" failed: ")
                .ok_or_else(|| parse_error(path, number, "malformed failure line"))?;
            let r: usize = r.parse().map_err(|_| parse_error(path, number, "malformed replication index"))?;
            if traces.len() <= r {
                traces.resize_with(r + 1, RegretTrace::default);
            }
            traces[r].failure = Some(message.to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let record = csv::StringRecord::from(line.split(',').collect::<Vec<_>>());
        if record.len() != TRACE_HEADER.len() {
            return Err(parse_error(path, number, format!("expected {} fields", TRACE_HEADER.len())));
        }
        let r: usize = field(path, number, &record, 0, "replication")?;
        let action: usize = field(path, number, &record, 2, "action")?;
        if action == 0 {
            return Err(parse_error(path, number, "actions are numbered from 1"));
        }
        let reward = match record.get(3) {
            Some("0") => false,
            Some("1") => true,
            _ => return Err(parse_error(path, number, "reward must be 0 or 1")),
        };
        let step = RegretStep {
            t: field(path, number, &record, 1, "t")?,
            action: action - 1,
            reward,
            instant_regret: field(path, number, &record, 4, "instant_regret")?,
            cumulative_regret: field(path, number, &record, 5, "cumulative_regret")?,
        };
        if traces.len() <= r {
            traces.resize_with(r + 1, RegretTrace::default);
        }
        traces[r].steps.push(step);
    }
    Ok(traces)
}

pub fn read_summary<R: BufRead>(input: R, path: &Path) -> Result<Vec<SummaryRow>> {
    let mut lines = input.lines();
    check_header(path, lines.next().transpose().map_err(io(path))?, &SUMMARY_HEADER)?;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let number = i + 2;
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = csv::StringRecord::from(line.split(',').collect::<Vec<_>>());
        rows.push(SummaryRow {
            t: field(path, number, &record, 0, "t")?,
            mean_cumulative_regret: field(path, number, &record, 1, "mean_cumulative_regret")?,
            std_error: field(path, number, &record, 2, "std_error")?,
            replications: field(path, number, &record, 3, "replications")?,
        });
    }
    Ok(rows)
}

pub fn save_traces(path: &Path, traces: &[RegretTrace]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io(path))?;
    write_traces(std::io::BufWriter::new(file), traces)
}

pub fn save_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io(path))?;
    write_summary(std::io::BufWriter::new(file), rows)
}

pub fn load_traces(path: &Path) -> Result<Vec<RegretTrace>> {
    let file = std::fs::File::open(path).map_err(io(path))?;
    read_traces(std::io::BufReader::new(file), path)
}

pub fn load_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let file = std::fs::File::open(path).map_err(io(path))?;
    read_summary(std::io::BufReader::new(file), path)
}
