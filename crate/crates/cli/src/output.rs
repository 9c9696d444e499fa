//! Versioned CSV and JSON writers.
//!
//! Every CSV starts with one comment line, `# schema=<version> config=<hash>`,
//! followed by a header row. Resumable tables are appended row by row.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;
use crate::error::{CliError, CliResult};

/// One representation's metrics; optional columns are left empty when the
/// stage did not run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub spec_id: String,
    pub template: String,
    pub delta_a: f64,
    pub delta_v: f64,
    pub i_az_sv: f64,
    pub i_ag_sv: f64,
    pub i_av_sz: f64,
    pub h_a_sg: f64,
    pub chain_residual: f64,
    pub success_rate: Option<f64>,
    pub off_support_steps: Option<u64>,
    pub nll: Option<f64>,
    pub excess: Option<f64>,
    pub modeling_error: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub seed: u64,
    pub log_base: String,
}

pub fn header_line(hash: &str) -> String {
    format!("# schema={SCHEMA_VERSION} config={hash}\n")
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serialises");
    text.push('\n');
    write_text(path, &text)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv { path: path.to_path_buf(), source }
}

/// Serialises `rows` with a header into a fresh file.
pub fn write_csv<T: Serialize>(path: &Path, hash: &str, rows: &[T]) -> CliResult<()> {
    let mut buf = header_line(hash).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row).map_err(csv_err(path))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

/// Appends rows to a table, writing the comment and header first when the
/// table is empty.
pub struct AppendTable {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl AppendTable {
    /// Opens `path` for appending and returns the spec ids already present.
    /// Refuses a table written under another config and drops a trailing
    /// partial line left by an interrupted run.
    pub fn open(path: &Path, hash: &str) -> CliResult<(Self, HashSet<String>)> {
        let mut done = HashSet::new();
        let mut fresh = true;
        if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            if !text.is_empty() {
                let first = text.lines().next().unwrap_or_default();
                let expected = header_line(hash);
                if first != expected.trim_end() {
                    let found = first
                        .split_whitespace()
                        .find_map(|t| t.strip_prefix("config="))
                        .unwrap_or("<missing>")
                        .to_string();
                    return Err(CliError::ConfigMismatch {
                        path: path.to_path_buf(),
                        found,
                        expected: hash.to_string(),
                    });
                }
                let complete = match text.rfind('\n') {
                    Some(i) => &text[..=i],
                    None => "",
                };
                if complete.len() != text.len() {
                    fs::write(path, complete).map_err(|e| CliError::io(path, e))?;
                }
                let mut reader = csv::ReaderBuilder::new()
                    .comment(Some(b'#'))
                    .from_reader(BufReader::new(complete.as_bytes()));
                let has_header = reader.headers().map(|h| !h.is_empty()).unwrap_or(false);
                for rec in reader.records() {
                    let rec = rec.map_err(csv_err(path))?;
                    if let Some(id) = rec.get(0) {
                        done.insert(id.to_string());
                    }
                }
                fresh = !has_header;
                if fresh {
                    fs::write(path, "").map_err(|e| CliError::io(path, e))?;
                }
            }
        }
        let mut file =
            OpenOptions::new().create(true).append(true).open(path).map_err(|e| CliError::io(path, e))?;
        if fresh {
            file.write_all(header_line(hash).as_bytes()).map_err(|e| CliError::io(path, e))?;
        }
        let writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        Ok((Self { path: path.to_path_buf(), writer }, done))
    }

    pub fn append<T: Serialize>(&mut self, row: &T) -> CliResult<()> {
        self.writer.serialize(row).map_err(csv_err(&self.path))
    }

    pub fn flush(&mut self) -> CliResult<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Data rows of a metrics table, skipping the comment line.
pub fn read_metrics(path: &Path) -> CliResult<Vec<MetricsRow>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    reader.deserialize().map(|r| r.map_err(csv_err(path))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str) -> MetricsRow {
        MetricsRow {
            spec_id: id.into(),
            template: "full".into(),
            delta_a: 0.0,
            delta_v: 0.5,
            i_az_sv: 0.1,
            i_ag_sv: 0.2,
            i_av_sz: 0.0,
            h_a_sg: 0.4,
            chain_residual: 0.0,
            success_rate: None,
            off_support_steps: None,
            nll: None,
            excess: None,
            modeling_error: None,
            iterations: None,
            converged: None,
            seed: 1,
            log_base: "e".into(),
        }
    }

    #[test]
    fn append_resume_and_refusal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        {
            let (mut t, done) = AppendTable::open(&path, "abc").unwrap();
            assert!(done.is_empty());
            t.append(&row("a")).unwrap();
            t.flush().unwrap();
        }
        // Simulate an interrupted write.
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"b,full,0.1").unwrap();
        drop(f);
        {
            let (mut t, done) = AppendTable::open(&path, "abc").unwrap();
            assert_eq!(done, HashSet::from(["a".to_string()]));
            t.append(&row("b")).unwrap();
            t.flush().unwrap();
        }
        let rows = read_metrics(&path).unwrap();
        assert_eq!(rows, vec![row("a"), row("b")]);
        assert!(fs::read_to_string(&path).unwrap().starts_with("# schema=asl-metrics/1 config=abc\n"));
        assert!(matches!(AppendTable::open(&path, "xyz"), Err(CliError::ConfigMismatch { .. })));

        let whole = dir.path().join("w.csv");
        write_csv(&whole, "abc", &[row("a"), row("b")]).unwrap();
        assert_eq!(fs::read(&whole).unwrap(), fs::read(&path).unwrap());
    }
}
