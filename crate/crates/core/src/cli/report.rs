//! Report bodies and CSV tables.

use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Command, ExperimentConfig, OutputFormat};
use crate::penalize::Verdict;

pub const REPORT_SCHEMA: &str = "penlab-report/1";
pub const CSV_SCHEMA: &str = "penlab-csv/1";

/// `git describe` of the build, or `unknown`.
pub const BUILD: &str = match option_env!("PENLAB_GIT_DESCRIBE") {
    Some(s) => s,
    None => "unknown",
};

/// A machine-readable report. Contains no timestamps, so identical
/// configurations give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: Command,
    pub build: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub verdict: Verdict,
    pub body: serde_json::Value,
}

impl Report {
    pub fn new(command: Command, config: ExperimentConfig, verdict: Verdict, body: serde_json::Value) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            command,
            build: BUILD,
            seed: config.seed,
            config,
            verdict,
            body,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Rows of strings under fixed column names. The first CSV column carries
/// the schema version.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> io::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["schema".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut r = vec![CSV_SCHEMA.to_string()];
            r.extend(row.iter().cloned());
            w.write_record(&r)?;
        }
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        String::from_utf8(bytes).map_err(io::Error::other)
    }
}

impl super::Outcome {
    /// Writes the JSON report to `path` and, for CSV output, the table to
    /// `path` with extension `csv`. Returns the written paths.
    pub fn write(&self, path: &Path, format: OutputFormat) -> io::Result<Vec<PathBuf>> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.report.to_json())?;
        let mut written = vec![path.to_path_buf()];
        if format == OutputFormat::Csv {
            let csv_path = path.with_extension("csv");
            std::fs::write(&csv_path, self.table.to_csv()?)?;
            written.push(csv_path);
        }
        Ok(written)
    }
}
