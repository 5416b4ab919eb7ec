use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::report::RunReport;

/// A CSV file held in memory: header row plus string cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().context("flushing csv buffer")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotData {
    pub tables: Vec<CsvTable>,
}

/// Writes to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

/// Writes every sample table of the report into its output directory and
/// returns the paths written. Reports without samples write nothing.
pub fn emit_plot_data(report: &RunReport) -> Result<Vec<PathBuf>> {
    report
        .plot
        .tables
        .iter()
        .map(|t| {
            let path = report.config.out_dir.join(&t.name);
            write_atomic(&path, &t.to_bytes()?)?;
            Ok(path)
        })
        .collect()
}
