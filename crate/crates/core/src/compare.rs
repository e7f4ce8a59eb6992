//! Side-by-side comparison table of several reports.
//!
//! Columns follow the published results layout: PSNR, SSIM, pixel MSE,
//! flow MSE (×100), NIQE, LPIPS (Alex, VGG), straightness (×100), D_ST and
//! P_ST. The best value in each column is marked with `*`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::report::REPORT_SCHEMA;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Higher,
    Lower,
}

#[derive(Debug, Clone, Copy)]
pub struct Column {
    pub header: &'static str,
    /// Scalar key in the report.
    pub key: &'static str,
    /// Display multiplier.
    pub scale: f64,
    pub decimals: usize,
    pub better: Better,
}

pub const COLUMNS: [Column; 10] = [
    Column { header: "PSNR(dB)", key: "psnr_mean", scale: 1.0, decimals: 2, better: Better::Higher },
    Column { header: "SSIM", key: "ssim_mean", scale: 1.0, decimals: 3, better: Better::Higher },
    Column { header: "Pixel MSE", key: "mse_pix", scale: 1.0, decimals: 2, better: Better::Lower },
    Column { header: "OF MSE (x100)", key: "mse_of", scale: 100.0, decimals: 4, better: Better::Lower },
    Column { header: "NIQE", key: "niqe_mean", scale: 1.0, decimals: 3, better: Better::Lower },
    Column { header: "LPIPS(Alex)", key: "lpips_alex_mean", scale: 1.0, decimals: 4, better: Better::Lower },
    Column { header: "LPIPS(VGG)", key: "lpips_vgg_mean", scale: 1.0, decimals: 4, better: Better::Lower },
    Column { header: "Straightness (x100)", key: "pq_temporal", scale: 100.0, decimals: 2, better: Better::Higher },
    Column { header: "D_ST", key: "d_st", scale: 1.0, decimals: 3, better: Better::Lower },
    Column { header: "P_ST", key: "p_st", scale: 1.0, decimals: 4, better: Better::Lower },
];

pub const MISSING: &str = "—";

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub name: String,
    /// Raw scalar values, one per column in [`COLUMNS`] order.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    /// `best[r][c]` is set when row `r` holds the best value of column `c`.
    pub best: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Text,
    Csv,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(TableFormat::Text),
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::InvalidParameter(format!("unknown table format {other:?} (text, csv, markdown)"))),
        }
    }
}

/// Extract a comparison row from a parsed report.
pub fn row_from_value(value: &Value, path: &Path) -> Result<CompareRow> {
    let bad = |reason: String| Error::SchemaMismatch {
        path: path.to_path_buf(),
        reason,
    };
    let schema = value.pointer("/meta/schema").and_then(Value::as_str);
    if schema != Some(REPORT_SCHEMA) {
        return Err(bad(format!("meta.schema is {schema:?}, expected {REPORT_SCHEMA:?}")));
    }
    let scalars = value
        .get("scalars")
        .and_then(Value::as_object)
        .ok_or_else(|| bad("missing scalars object".into()))?;
    let mut values = Vec::with_capacity(COLUMNS.len());
    for col in &COLUMNS {
        let v = match scalars.get(col.key) {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => n.as_f64(),
            Some(other) => return Err(bad(format!("scalars.{} is {other}, expected a number or null", col.key))),
        };
        values.push(v);
    }
    let name = value
        .pointer("/meta/name")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    Ok(CompareRow { name, values })
}

pub fn read_row(path: &Path) -> Result<CompareRow> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::SchemaMismatch {
        path: path.to_path_buf(),
        reason: format!("not JSON: {e}"),
    })?;
    row_from_value(&value, path)
}

/// Build the table; ties share the mark and missing values never win.
pub fn compare_rows(rows: Vec<CompareRow>) -> Result<CompareTable> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("compare needs at least one report".into()));
    }
    let mut best = vec![vec![false; COLUMNS.len()]; rows.len()];
    for (c, col) in COLUMNS.iter().enumerate() {
        let present = rows.iter().filter_map(|r| r.values[c]);
        let target = match col.better {
            Better::Higher => present.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))),
            Better::Lower => present.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v)))),
        };
        if let Some(t) = target {
            for (r, row) in rows.iter().enumerate() {
                best[r][c] = row.values[c] == Some(t);
            }
        }
    }
    Ok(CompareTable { rows, best })
}

pub fn compare_files(paths: &[PathBuf]) -> Result<CompareTable> {
    compare_rows(paths.iter().map(|p| read_row(p)).collect::<Result<_>>()?)
}

impl CompareTable {
    fn cell(&self, r: usize, c: usize) -> String {
        match self.rows[r].values[c] {
            None => MISSING.to_string(),
            Some(v) => {
                let col = &COLUMNS[c];
                let mark = if self.best[r][c] { "*" } else { "" };
                format!("{:.*}{mark}", col.decimals, v * col.scale)
            }
        }
    }

    fn header(&self) -> Vec<String> {
        std::iter::once("Method".to_string())
            .chain(COLUMNS.iter().map(|c| c.header.to_string()))
            .collect()
    }

    fn body(&self) -> Vec<Vec<String>> {
        (0..self.rows.len())
            .map(|r| {
                std::iter::once(self.rows[r].name.clone())
                    .chain((0..COLUMNS.len()).map(|c| self.cell(r, c)))
                    .collect()
            })
            .collect()
    }

    pub fn render(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Csv => self.to_csv(),
            TableFormat::Text => self.to_text(),
            TableFormat::Markdown => self.to_markdown(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for row in self.body() {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_text(&self) -> String {
        let header = self.header();
        let body = self.body();
        let width: Vec<usize> = (0..header.len())
            .map(|c| {
                std::iter::once(&header[c])
                    .chain(body.iter().map(|r| &r[c]))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    let pad = width[c] - s.chars().count();
                    if c == 0 {
                        format!("{s}{}", " ".repeat(pad))
                    } else {
                        format!("{}{s}", " ".repeat(pad))
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&header);
        for row in &body {
            line(row);
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let header = self.header();
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let rule: Vec<&str> = header.iter().enumerate().map(|(c, _)| if c == 0 { ":--" } else { "--:" }).collect();
        let _ = writeln!(out, "| {} |", rule.join(" | "));
        for row in self.body() {
            let _ = writeln!(out, "| {} |", row.join(" | "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, d_st: Option<f64>, p_st: Option<f64>) -> CompareRow {
        let mut values = vec![None; COLUMNS.len()];
        values[8] = d_st;
        values[9] = p_st;
        CompareRow { name: name.into(), values }
    }

    #[test]
    fn lower_d_st_is_best() {
        let t = compare_rows(vec![row("a", Some(75.55), Some(0.6737)), row("b", Some(54.05), None)]).unwrap();
        assert_eq!(t.best[0][8], false);
        assert_eq!(t.best[1][8], true);
        assert_eq!(t.best[0][9], true);
        assert_eq!(t.best[1][9], false);
        assert!(t.to_text().contains(MISSING));
    }

    #[test]
    fn single_row_marks_every_present_column() {
        let t = compare_rows(vec![row("a", Some(1.0), Some(2.0))]).unwrap();
        assert!(t.best[0][8] && t.best[0][9]);
        assert!(!t.best[0][0]);
        assert!(compare_rows(vec![]).is_err());
    }

    #[test]
    fn schema_checks() {
        let p = Path::new("r.json");
        let v: Value = serde_json::json!({"meta": {"schema": "other"}, "scalars": {}});
        assert!(matches!(row_from_value(&v, p), Err(Error::SchemaMismatch { .. })));
        let v: Value = serde_json::json!({"meta": {"schema": REPORT_SCHEMA}, "scalars": {"d_st": "x"}});
        assert!(matches!(row_from_value(&v, p), Err(Error::SchemaMismatch { .. })));
        let v: Value = serde_json::json!({"meta": {"schema": REPORT_SCHEMA}, "scalars": {"d_st": 3.5}});
        let r = row_from_value(&v, p).unwrap();
        assert_eq!(r.name, "r");
        assert_eq!(r.values[8], Some(3.5));
    }
}
