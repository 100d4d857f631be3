//! Tabular output, path and trace files, and estimate records.
//!
//! Floating-point cells are written with 17 significant digits in CSV and
//! `.dat` output, which is enough to recover every `f64` exactly.

use std::io::{Read, Write};

use polyel_core::mcmc::SweepRecord;
use polyel_core::{Estimate, ModelParams, PathSample, TimeGrid};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::error::{Error, Result};

/// Formats `x` with 17 significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // `f64::from_str` accepts these spellings back.
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(x) => Some(x),
            Cell::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Cell::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    fn text(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn dat(&self) -> String {
        match self {
            Cell::Bool(b) => (*b as u8).to_string(),
            Cell::Text(s) if s.is_empty() => "-".into(),
            Cell::Text(s) => s.split_whitespace().collect::<Vec<_>>().join("_"),
            other => other.text(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// Builds a row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::io::Cell::from($x)),*] };
}

/// A named table with a fixed column list.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// Panics if `row` does not have one cell per column.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch in table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn get(&self, row: usize, column: &str) -> Option<&Cell> {
        self.rows.get(row)?.get(self.column(column)?)
    }

    pub fn num(&self, row: usize, column: &str) -> Option<f64> {
        self.get(row, column)?.as_f64()
    }

    /// Index of the first row whose `column` holds `value`.
    pub fn find(&self, column: &str, value: &str) -> Option<usize> {
        let c = self.column(column)?;
        self.rows.iter().position(|r| r[c].as_str() == Some(value))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::text))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Whitespace-separated columns under a `#` header, for plotting tools.
    pub fn write_dat<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {}", self.name)?;
        writeln!(w, "# {}", self.columns.join(" "))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::dat).collect();
            writeln!(w, "{}", cells.join(" "))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> = self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                Value::Object(m)
            })
            .collect();
        json!({ "name": self.name, "columns": self.columns, "rows": rows })
    }

    /// Renders the table as a string in `format`.
    pub fn render(&self, format: Format) -> Result<String> {
        let mut buf = Vec::new();
        match format {
            Format::Csv => self.write_csv(&mut buf)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut buf, &self.to_json())?;
                buf.push(b'\n');
            }
        }
        Ok(String::from_utf8(buf).expect("writers emit UTF-8"))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    i: usize,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// Node table with columns `i, t, x, y, z`.
pub fn path_table(path: &PathSample) -> Table {
    let mut t = Table::new("path", &["i", "t", "x", "y", "z"]);
    for (i, (time, p)) in path.grid().times().zip(path.positions()).enumerate() {
        t.push(row![i, time, p[0], p[1], p[2]]);
    }
    t
}

/// Relative tolerance for matching file times against a uniform grid.
const GRID_TOL: f64 = 1e-9;

/// Reads a path written as `i, t, x, y, z` rows.
///
/// The horizon is the last `t`; the times must match the uniform grid on
/// `[0, T]` and the first node must sit at the origin.
pub fn read_path_csv<R: Read>(r: R) -> Result<PathSample> {
    let mut rows = Vec::new();
    for rec in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r).deserialize() {
        let row: NodeRow = rec?;
        rows.push(row);
    }
    if rows.len() < 3 {
        return Err(Error::Invalid("a path file needs at least three nodes".into()));
    }
    if rows.iter().enumerate().any(|(k, r)| r.i != k) {
        return Err(Error::Invalid("node indices must run 0, 1, 2, ... in order".into()));
    }
    let horizon = rows[rows.len() - 1].t;
    let grid = TimeGrid::new(horizon, rows.len() - 1)?;
    for (k, r) in rows.iter().enumerate() {
        if !((r.t - grid.time(k)).abs() <= GRID_TOL * horizon.max(1.0)) {
            return Err(Error::Invalid(format!("node {k}: time {} is off the uniform grid", r.t)));
        }
    }
    let positions: Vec<[f64; 3]> = rows.iter().map(|r| [r.x, r.y, r.z]).collect();
    Ok(PathSample::from_positions(grid, &positions)?)
}

/// Streams per-sweep chain states as CSV.
pub struct TraceWriter<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub const COLUMNS: [&'static str; 6] = ["sweep", "coulomb", "rg", "endpoint_x1", "move", "accepted"];

    pub fn new(w: W) -> Result<Self> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::COLUMNS)?;
        Ok(TraceWriter { out })
    }

    pub fn record(&mut self, r: &SweepRecord) -> Result<()> {
        self.out.write_record([
            r.sweep.to_string(),
            fmt_num(r.coulomb),
            fmt_num(r.rg),
            fmt_num(r.endpoint_x1),
            r.kind.name().to_string(),
            (r.accepted as u8).to_string(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| Error::Stdio(e.into_error()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagsRecord {
    pub unreliable: bool,
    pub degenerate: bool,
    pub clamped: bool,
}

/// One estimate with the model parameters it was computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub method: String,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n: usize,
    pub beta: f64,
    pub mu: f64,
    pub value: f64,
    pub log_domain: bool,
    pub std_error: f64,
    pub n_effective: f64,
    pub flags: FlagsRecord,
}

impl EstimateRecord {
    pub const COLUMNS: [&'static str; 12] = [
        "method",
        "T",
        "n",
        "beta",
        "mu",
        "value",
        "log_domain",
        "std_error",
        "n_effective",
        "unreliable",
        "degenerate",
        "clamped",
    ];

    pub fn new(e: &Estimate, params: &ModelParams, mu: f64) -> Self {
        EstimateRecord {
            method: e.method.name().into(),
            horizon: params.horizon,
            n: params.n_steps,
            beta: params.beta,
            mu,
            value: e.value,
            log_domain: e.log_domain,
            std_error: e.std_error,
            n_effective: e.n_effective,
            flags: FlagsRecord { unreliable: e.flags.unreliable, degenerate: e.flags.degenerate, clamped: e.flags.clamped },
        }
    }

    pub fn row(&self) -> Vec<Cell> {
        row![
            self.method.as_str(),
            self.horizon,
            self.n,
            self.beta,
            self.mu,
            self.value,
            self.log_domain,
            self.std_error,
            self.n_effective,
            self.flags.unreliable,
            self.flags.degenerate,
            self.flags.clamped,
        ]
    }

    /// `(log Z, standard error of log Z)`, by the delta method for linear values.
    pub fn log_value(&self) -> (f64, f64) {
        if self.log_domain {
            (self.value, self.std_error)
        } else {
            (self.value.ln(), self.std_error / self.value)
        }
    }
}

pub fn estimate_table(records: &[EstimateRecord]) -> Table {
    let mut t = Table::new("estimates", &EstimateRecord::COLUMNS);
    for r in records {
        t.push(r.row());
    }
    t
}
