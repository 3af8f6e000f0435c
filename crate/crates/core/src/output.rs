//! Plot-ready data files and JSON sidecars, written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::fock::MODES;
use crate::protocols::ProtocolReport;

/// Named numeric columns plus `#` comment lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { comments: Vec::new(), columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    /// Comma-separated with a header row.
    pub fn to_csv(&self) -> String {
        self.render(",", false)
    }

    /// Whitespace-separated; the header is a comment.
    pub fn to_dat(&self) -> String {
        self.render(" ", true)
    }

    fn render(&self, sep: &str, commented_header: bool) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        if commented_header {
            out.push_str("# ");
        }
        out.push_str(&self.columns.join(sep));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            out.push_str(&cells.join(sep));
            out.push('\n');
        }
        out
    }
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Paths written by [`emit_figure_data`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Written {
    pub csv: PathBuf,
    pub dat: PathBuf,
    pub sidecar: PathBuf,
}

/// `<stem>.csv`, `<stem>.dat` and the JSON sidecar `<stem>.json`.
pub fn emit_figure_data<S: Serialize>(stem: &Path, csv: &Table, dat: &Table, sidecar: &S) -> Result<Written> {
    let out = Written { csv: with_ext(stem, "csv"), dat: with_ext(stem, "dat"), sidecar: with_ext(stem, "json") };
    let json = serde_json::to_string_pretty(sidecar)
        .map_err(|e| Error::Consistency(format!("sidecar serialization failed: {e}")))?;
    write_atomic(&out.csv, csv.to_csv().as_bytes())?;
    write_atomic(&out.dat, dat.to_dat().as_bytes())?;
    write_atomic(&out.sidecar, (json + "\n").as_bytes())?;
    Ok(out)
}

fn population_columns(prefix: &str) -> Vec<String> {
    (1..=MODES).map(|j| format!("{prefix}N{j}")).collect()
}

/// `t, N1..N4`, divided by `scale`.
pub fn series_table(series: &TimeSeries, scale: f64) -> Table {
    let mut cols = vec!["t".to_string()];
    cols.extend(population_columns(""));
    let mut t = Table::new(cols);
    for i in 0..series.len() {
        let mut row = vec![series.times[i]];
        row.extend(series.sample(i).iter().map(|x| x / scale));
        t.push(row);
    }
    t
}

/// `t, num_N1..N4, ana_N1..N4` with the field switches as comments.
pub fn report_table(report: &ProtocolReport, scale: f64) -> Table {
    let mut cols = vec!["t".to_string()];
    cols.extend(population_columns("num_"));
    let ana = report.analytic_series.as_ref();
    if ana.is_some() {
        cols.extend(population_columns("ana_"));
    }
    let mut t = Table::new(cols);
    for b in &report.stage_boundaries {
        t.comment(format!("stage_boundary {b:e}"));
    }
    for i in 0..report.series.len() {
        let mut row = vec![report.series.times[i]];
        row.extend(report.series.sample(i).iter().map(|x| x / scale));
        if let Some(a) = ana {
            row.extend(a.sample(i).iter().map(|x| x / scale));
        }
        t.push(row);
    }
    t
}
