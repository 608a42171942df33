//! Table and JSON emission with deterministic formatting.
//!
//! CSV files start with two comment lines (`# cohtherm <version>` and
//! `# params: key=value;...`) followed by a header row. Floats are written
//! in `{:.16e}` scientific notation so files round-trip bit for bit.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::model::MachineParams;

pub const TOOL: &str = "cohtherm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

/// Column names plus rows of equal length.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// Writes the comment header, one `# ` line per note, then `table` as CSV.
pub fn write_csv<W: Write>(
    mut out: W,
    params: Option<&MachineParams>,
    notes: &[String],
    table: &Table,
) -> Result<()> {
    writeln!(out, "# {TOOL} {VERSION}")?;
    if let Some(p) = params {
        writeln!(out, "# params: {}", p.summary())?;
    }
    for note in notes {
        writeln!(out, "# {note}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(
    params: Option<&MachineParams>,
    notes: &[String],
    table: &Table,
) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, params, notes, table)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    params: Option<&'a MachineParams>,
    result: &'a T,
}

/// Pretty JSON `{tool, version, params, result}`.
pub fn json_string<T: Serialize>(params: Option<&MachineParams>, result: &T) -> Result<String> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        params,
        result,
    };
    serde_json::to_string_pretty(&env).map_err(|e| crate::Error::Io(e.to_string()))
}
