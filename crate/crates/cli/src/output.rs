//! CSV tables and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use shgcat_core::observables::QGrid;

use crate::CliError;

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

/// Floats carry 17 significant digits so values round-trip exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: Vec<&'static str>) -> Self {
        Self {
            name: name.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * self.rows.len() * self.header.len().max(1));
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Float(x) => out.push_str(&format_float(*x)),
                    Cell::Int(x) => write!(out, "{x}").expect("write to string"),
                    Cell::Bool(x) => write!(out, "{x}").expect("write to string"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Column `j` of a float column, for tests and summaries.
    pub fn float_column(&self, j: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match r[j] {
                Cell::Float(x) => x,
                Cell::Int(x) => x as f64,
                Cell::Bool(x) => f64::from(u8::from(x)),
            })
            .collect()
    }
}

/// `re_alpha, im_alpha, q` rows, real part varying fastest.
pub fn q_table(name: impl Into<String>, grid: &QGrid) -> Table {
    let mut table = Table::new(name, vec!["re_alpha", "im_alpha", "q"]);
    for (i_im, &im) in grid.im_axis.iter().enumerate() {
        for (i_re, &re) in grid.re_axis.iter().enumerate() {
            table.push(vec![re.into(), im.into(), grid.at(i_re, i_im).into()]);
        }
    }
    table
}

/// Label for file names: shortest decimal form of `x`.
pub fn label(x: f64) -> String {
    let s = format!("{x}");
    s.replace('-', "m")
}

pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(&t.name);
            fs::write(&path, t.to_csv()).map_err(|e| CliError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
