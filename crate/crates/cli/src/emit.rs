//! Report serialization: canonical JSON or one CSV per task.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::pipeline::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Pretty JSON with object keys in sorted order.
pub fn to_json(report: &Report) -> String {
    // serde_json's default map is ordered by key.
    let v = serde_json::to_value(report).expect("report serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.display().to_string(), source: e }
}

/// Writes the report into `dir` and returns the files written.
pub fn emit(report: &Report, format: Format, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    match format {
        Format::Json => {
            let path = dir.join("report.json");
            fs::write(&path, to_json(report)).map_err(io(&path))?;
            Ok(vec![path])
        }
        Format::Csv => {
            let mut out = Vec::new();
            for t in &report.tasks {
                let path = dir.join(format!("{:02}_{}.csv", t.index, t.name));
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(&t.table.columns)?;
                for row in &t.table.rows {
                    w.write_record(row)?;
                }
                w.flush().map_err(io(&path))?;
                out.push(path);
            }
            Ok(out)
        }
    }
}
