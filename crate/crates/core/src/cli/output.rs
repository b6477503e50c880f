//! Deterministic CSV/JSON artifacts and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{Error, Result, C64};

/// One CSV row. Non-finite numbers are written as empty cells and mark the
/// row's status, so no NaN or Inf text ever reaches a file.
#[derive(Clone, Debug, Default)]
pub struct CsvRow {
    cells: Vec<String>,
    status: Option<String>,
}

impl CsvRow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(mut self, s: impl Into<String>) -> Self {
        self.cells.push(s.into());
        self
    }

    pub fn int(self, n: impl std::fmt::Display) -> Self {
        self.text(n.to_string())
    }

    pub fn num(mut self, x: f64) -> Self {
        if x.is_finite() {
            self.cells.push(format!("{x:e}"));
        } else {
            self.cells.push(String::new());
            self.status.get_or_insert_with(|| "non_finite".into());
        }
        self
    }

    pub fn complex(self, z: C64) -> Self {
        self.num(z.re).num(z.im)
    }

    pub fn blank(self, n: usize) -> Self {
        (0..n).fold(self, |r, _| r.text(""))
    }

    pub fn error(mut self, code: &str) -> Self {
        self.status = Some(code.into());
        self
    }

    fn finish(mut self) -> Vec<String> {
        self.cells.push(self.status.unwrap_or_else(|| "ok".into()));
        self.cells
    }
}

/// `t0_re, t0_im, ...` header columns for `n` parameters.
pub fn t_header(n: usize) -> Vec<String> {
    (0..n).flat_map(|i| [format!("t{i}_re"), format!("t{i}_im")]).collect()
}

pub fn t_cells(row: CsvRow, t: &[C64]) -> CsvRow {
    t.iter().fold(row, |r, z| r.complex(*z))
}

pub fn pair_cells(row: CsvRow, t: &[[f64; 2]]) -> CsvRow {
    t.iter().fold(row, |r, z| r.num(z[0]).num(z[1]))
}

/// Collects the artifacts of one run inside the output directory.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(self.dir.join(name), text)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: Vec<CsvRow>) -> Result<()> {
        let path = self.dir.join(name);
        write_csv(&path, header, rows)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn record(&mut self, name: &str) {
        self.files.push(name.into());
    }

    pub fn manifest(&mut self, command: &str, seed: u64, config: &[u8]) -> Result<()> {
        let mut files = self.files.clone();
        files.sort();
        files.dedup();
        let m = Manifest {
            tool: "vhs",
            version: env!("CARGO_PKG_VERSION"),
            format: 1,
            command: command.into(),
            seed,
            config_sha256: hex::encode(Sha256::digest(config)),
            outputs: files,
        };
        self.json("manifest.json", &m)
    }
}

pub fn write_csv(path: &Path, header: &[String], rows: Vec<CsvRow>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut h = header.to_vec();
    h.push("status".into());
    w.write_record(&h)?;
    for r in rows {
        let cells = r.finish();
        if cells.len() != h.len() {
            return Err(Error::Shape(format!("csv row has {} cells, header {}", cells.len(), h.len())));
        }
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    format: u32,
    command: String,
    seed: u64,
    config_sha256: String,
    outputs: Vec<String>,
}

/// Machine-readable error document.
#[derive(Serialize)]
pub struct ErrorReport {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        let path = match e {
            Error::Scenario { path, .. } => Some(path.clone()),
            _ => None,
        };
        ErrorReport { error: e.code().into(), message: e.to_string(), path }
    }
}
