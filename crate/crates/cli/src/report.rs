//! Report assembly and serialization.
//!
//! Floating-point values are written with 12 significant digits in both JSON
//! and CSV, so repeated runs compare byte for byte apart from `timestamp`.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::CliError;
use fw_srde::{ControlField, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_number(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) => json!(round_sig(*x)),
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
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Table {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn json(&self) -> Value {
        json!({
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(&self.columns).map_err(|e| csv_error(path, e))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(format!("{other:?}")),
        },
    }
}

/// Rows `t_index, x_index, t, x, value` for every node of a path, `t_index = 0..=n_t`.
pub fn trajectory_table(path: &Trajectory) -> Table {
    let g = path.grid;
    let mut table = Table::new("trajectory", &["t_index", "x_index", "t", "x", "value"]);
    for k in 0..path.rows() {
        for (j, &v) in path.row(k).iter().enumerate() {
            table.push(vec![k.into(), j.into(), g.t(k).into(), g.x(j).into(), v.into()]);
        }
    }
    table
}

/// Same columns as [`trajectory_table`]; row `t_index = k` is the value on `[t_k, t_{k+1})`.
/// The file can be read back with `--control`.
pub fn control_table(h: &ControlField) -> Table {
    let g = h.grid;
    let mut table = Table::new("control", &["t_index", "x_index", "t", "x", "value"]);
    for k in 0..g.time_steps {
        for (j, &v) in h.row(k).iter().enumerate() {
            table.push(vec![k.into(), j.into(), g.t(k).into(), g.x(j).into(), v.into()]);
        }
    }
    table
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The run finished but the property under test failed.
    Failed(String),
    NotConverged(String),
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed(_) => 1,
            Status::NotConverged(_) => 2,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Failed(_) => "failed",
            Status::NotConverged(_) => "not_converged",
        }
    }
}

#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub result: Value,
    pub tables: Vec<Table>,
    pub status: Status,
}

impl Report {
    pub fn new(command: &'static str, config: &impl Serialize, result: &impl Serialize) -> Result<Self, CliError> {
        Ok(Report {
            command,
            config: to_value(config)?,
            result: to_value(result)?,
            tables: Vec::new(),
            status: Status::Ok,
        })
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.tables.push(table);
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    fn document(&self, tables: Value) -> Value {
        let mut doc = Map::new();
        doc.insert("command".into(), json!(self.command));
        doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        doc.insert("timestamp".into(), json!(unix_seconds()));
        doc.insert("status".into(), json!(self.status.label()));
        if let Status::Failed(m) | Status::NotConverged(m) = &self.status {
            doc.insert("message".into(), json!(m));
        }
        doc.insert("config".into(), self.config.clone());
        doc.insert("result".into(), self.result.clone());
        doc.insert("tables".into(), tables);
        let mut doc = Value::Object(doc);
        round_value(&mut doc);
        doc
    }

    /// Writes the report and returns the paths written.
    ///
    /// * no path: JSON on standard output, tables inline;
    /// * `*.csv`: the first table at `path`, further tables as `<stem>_<table>.csv`;
    /// * anything else: JSON at `path`, every table as `<stem>_<table>.csv`.
    pub fn emit(&self, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
        let Some(path) = out else {
            let tables: Map<String, Value> = self.tables.iter().map(|t| (t.name.to_string(), t.json())).collect();
            let text = pretty(&self.document(Value::Object(tables)))?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            return Ok(Vec::new());
        };
        let csv_only = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let mut written = Vec::new();
        let mut names = Map::new();
        for (i, table) in self.tables.iter().enumerate() {
            let target = if csv_only && i == 0 { path.to_path_buf() } else { companion(path, table.name) };
            table.write_csv(&target)?;
            names.insert(table.name.to_string(), json!(file_name(&target)));
            written.push(target);
        }
        if !csv_only {
            let text = pretty(&self.document(Value::Object(names)))?;
            let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
            writeln!(f, "{text}").map_err(|e| CliError::io(path, e))?;
            written.insert(0, path.to_path_buf());
        }
        Ok(written)
    }
}

fn companion(path: &Path, table: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_{table}.csv"))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn unix_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn to_value(v: &impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Input(format!("cannot serialize report: {e}")))
}

fn pretty(v: &Value) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Input(format!("cannot serialize report: {e}")))
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:?}", round_sig(x))
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *v = json!(round_sig(x));
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}
