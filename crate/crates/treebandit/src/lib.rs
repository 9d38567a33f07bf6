//! File formats, replication runner and command-line plumbing around `treebandit-core`.

pub mod config;
pub mod error;
pub mod ingest;
pub mod runner;
pub mod schema_file;
pub mod theory_report;
pub mod trace_io;
pub mod truth_file;

pub use error::{Error, Result};
