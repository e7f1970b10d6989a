//! Table and report writers with a fixed float format.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::value::RawValue;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// 17 significant digits, `.` as decimal separator.
pub fn fixed(x: f64) -> String {
    format!("{x:.16e}")
}

/// Float that serializes as a JSON number in the fixed format; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed(pub f64);

impl Serialize for Fixed {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(fixed(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Float(Fixed),
    Count(usize),
    Empty,
}

impl Cell {
    pub fn float(x: f64) -> Self {
        Cell::Float(Fixed(x))
    }

    pub fn maybe(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::float)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => fixed(x.0),
            Cell::Count(n) => n.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn to_json(&self, command: &str, config: &RunConfig) -> Result<String, CliError> {
        #[derive(Serialize)]
        struct Document<'a> {
            command: &'a str,
            config: &'a RunConfig,
            columns: &'a [String],
            rows: &'a [Vec<Cell>],
        }
        to_json(&Document {
            command,
            config,
            columns: &self.columns,
            rows: &self.rows,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        context: format!("creating {}", dir.display()),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        context: format!("writing {}", path.display()),
        source,
    })?;
    Ok(path)
}

/// Writes `table` once per requested format as `<stem>.csv` / `<stem>.json`.
pub fn write_table(
    dir: &Path,
    stem: &str,
    command: &str,
    table: &Table,
    formats: &[Format],
    config: &RunConfig,
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for format in formats {
        let path = match format {
            Format::Csv => write_file(dir, &format!("{stem}.csv"), &table.to_csv())?,
            Format::Json => write_file(dir, &format!("{stem}.json"), &table.to_json(command, config)?)?,
        };
        written.push(path);
    }
    Ok(written)
}
