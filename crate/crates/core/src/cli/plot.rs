//! Long-form plotting tables derived from grid results.

use std::path::{Path, PathBuf};

use crate::cone::StabilityReport;
use crate::{Error, Result, C64};

use super::output::{pair_cells, t_cells, t_header, write_csv, CsvRow};

/// One point of a locus membership grid.
#[derive(Clone, Debug)]
pub struct LocusPoint {
    pub t: Vec<C64>,
    pub residual: f64,
    pub member: bool,
    pub error: Option<String>,
}

/// One residual of a per-point solve, keyed by sample id.
#[derive(Clone, Debug)]
pub struct ResidualPoint {
    pub id: usize,
    pub t: Vec<C64>,
    pub residual: f64,
    pub error: Option<String>,
}

pub enum GridResults<'a> {
    Stability(&'a StabilityReport),
    Locus { points: &'a [LocusPoint], active: &'a [usize] },
    Residuals(&'a [ResidualPoint]),
}

pub const KINDS: [&str; 3] = ["margins", "locus-slice", "residual-heatmap"];

/// Write `plot_<kind>.csv` into `dir`. Rows keep the grid order.
pub fn emit_plot_data(results: &GridResults<'_>, kind: &str, dir: &Path) -> Result<PathBuf> {
    if !KINDS.contains(&kind) {
        return Err(Error::Input(format!("unknown plot kind `{kind}`; expected one of {KINDS:?}")));
    }
    let path = dir.join(format!("plot_{kind}.csv"));
    match (kind, results) {
        ("margins", GridResults::Stability(rep)) => {
            let n = rep.records.first().map_or(0, |r| r.t.len());
            let mut header = t_header(n);
            header.extend(["phi_norm", "margin", "a_norm", "pure"].map(String::from));
            let rows = rep
                .records
                .iter()
                .map(|r| {
                    let row = pair_cells(CsvRow::new(), &r.t).num(r.phi_norm).num(r.margin).num(r.a_norm).int(r.pure);
                    match &r.error {
                        Some(e) => row.error(e),
                        None => row,
                    }
                })
                .collect();
            write_csv(&path, &header, rows)?;
        }
        ("locus-slice", GridResults::Locus { points, active }) => {
            let mut header: Vec<String> = active.iter().flat_map(|i| [format!("t{i}_re"), format!("t{i}_im")]).collect();
            header.extend(["residual", "member"].map(String::from));
            let rows = points
                .iter()
                .map(|p| {
                    let sel: Vec<C64> = active.iter().map(|&i| p.t[i]).collect();
                    let row = t_cells(CsvRow::new(), &sel).num(p.residual).int(p.member);
                    match &p.error {
                        Some(e) => row.error(e),
                        None => row,
                    }
                })
                .collect();
            write_csv(&path, &header, rows)?;
        }
        ("residual-heatmap", GridResults::Residuals(points)) => {
            let n = points.first().map_or(0, |p| p.t.len());
            let mut header = vec!["id".to_string()];
            header.extend(t_header(n));
            header.push("log10_residual".into());
            let rows = points
                .iter()
                .map(|p| {
                    // f64::max would turn a NaN residual into the floor
                    let lg = if p.residual.is_nan() { f64::NAN } else { p.residual.max(1e-300).log10() };
                    let row = t_cells(CsvRow::new().int(p.id), &p.t).num(lg);
                    match &p.error {
                        Some(e) => row.error(e),
                        None => row,
                    }
                })
                .collect();
            write_csv(&path, &header, rows)?;
        }
        _ => return Err(Error::Input(format!("plot kind `{kind}` does not apply to these results"))),
    }
    Ok(path)
}
