//! Column tables and their CSV encoding.

use std::io;
use std::path::Path;

use nzkl::equivalence::IdentityReport;
use nzkl::TimeGrid;

/// Named numeric columns sharing one time axis; `t` is always first.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn new(grid: &TimeGrid) -> Self {
        Self { columns: vec![("t".to_string(), grid.points().collect())] }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.len());
        self.columns.push((name.into(), values));
    }

    pub fn len(&self) -> usize {
        self.columns[0].1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn headers(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_table<W: io::Write>(table: &Table, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.headers())?;
    for j in 0..table.len() {
        w.write_record(table.columns.iter().map(|(_, v)| format_number(v[j])))?;
    }
    w.flush()?;
    Ok(())
}

pub const REPORT_HEADER: [&str; 7] = ["name", "pass", "residual_max", "residual_norm", "tolerance", "domain", "skipped"];

pub fn write_reports<W: io::Write>(reports: &[IdentityReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            r.pass.to_string(),
            format_number(r.residual_max),
            format_number(r.residual_norm),
            format_number(r.tolerance),
            r.domain.clone(),
            r.skipped.join("; "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_table(table: &Table, path: &Path) -> io::Result<()> {
    let file = io::BufWriter::new(std::fs::File::create(path)?);
    write_table(table, file).map_err(io::Error::other)
}

pub fn save_reports(reports: &[IdentityReport], path: &Path) -> io::Result<()> {
    let file = io::BufWriter::new(std::fs::File::create(path)?);
    write_reports(reports, file).map_err(io::Error::other)
}
