//! CSV datasets, JSON reports and tabular output.
//!
//! Input files carry a header with `y` (empty or `NA` on rows without the true
//! response), `ytilde`, an optional integer `group`, and covariates `x1..xp`.
//! Rows with `y` present form the validation sample whatever their position
//! in the file.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::estimators::{FitResult, FitWarning, Method};
use crate::extensions::GroupedDataset;
use crate::model::Dataset;

pub const REPORT_VERSION: u32 = 1;

/// How covariate columns map onto the design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadOptions {
    /// Prepend a constant column.
    pub intercept: bool,
}

struct Row {
    y: Option<bool>,
    ytilde: bool,
    group: Option<i64>,
    x: Vec<f64>,
}

struct Table {
    p: usize,
    intercept: bool,
    has_group: bool,
    rows: Vec<Row>,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn parse_binary(field: &str, column: &str, line: u64) -> Result<bool> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(schema(format!("line {line}: column '{column}' must be 0 or 1, found '{other}'"))),
    }
}

fn read_table<R: Read>(reader: R, opts: ReadOptions) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| schema(format!("cannot read header: {e}")))?.clone();
    let mut y_col = None;
    let mut yt_col = None;
    let mut group_col = None;
    let mut x_cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, h) in headers.iter().enumerate() {
        let slot = match h {
            "y" => &mut y_col,
            "ytilde" => &mut yt_col,
            "group" => &mut group_col,
            _ => {
                let k = h
                    .strip_prefix('x')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| schema(format!("unexpected column '{h}'")))?;
                if x_cols.insert(k, i).is_some() {
                    return Err(schema(format!("duplicate column '{h}'")));
                }
                continue;
            }
        };
        if slot.replace(i).is_some() {
            return Err(schema(format!("duplicate column '{h}'")));
        }
    }
    let yt_col = yt_col.ok_or_else(|| schema("missing required column 'ytilde'"))?;
    let y_col = y_col.ok_or_else(|| schema("missing required column 'y'"))?;
    if let Some((&last, _)) = x_cols.iter().next_back() {
        if last != x_cols.len() {
            let gap = (1..=last).find(|k| !x_cols.contains_key(k)).unwrap_or(last);
            return Err(schema(format!("missing column 'x{gap}'")));
        }
    }
    let q = x_cols.len();
    let p = q + opts.intercept as usize;
    if p == 0 {
        return Err(schema("no covariate columns (x1..xp) and no intercept"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| schema(format!("malformed record: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let y = match field(y_col) {
            "" | "NA" | "na" => None,
            v => Some(parse_binary(v, "y", line)?),
        };
        let ytilde = parse_binary(field(yt_col), "ytilde", line)?;
        let group = match group_col {
            Some(g) => Some(
                field(g)
                    .parse::<i64>()
                    .map_err(|_| schema(format!("line {line}: column 'group' must be an integer")))?,
            ),
            None => None,
        };
        let mut x = Vec::with_capacity(p);
        if opts.intercept {
            x.push(1.0);
        }
        for (k, &i) in &x_cols {
            let v =
                field(i).parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    schema(format!("line {line}: column 'x{k}' is not a finite number: '{}'", field(i)))
                })?;
            x.push(v);
        }
        rows.push(Row { y, ytilde, group, x });
    }
    if rows.is_empty() {
        return Err(schema("file has no data rows"));
    }
    if rows.iter().all(|r| r.y.is_none()) {
        return Err(schema("no row has the true response 'y' (validation sample is empty)"));
    }
    Ok(Table { p, intercept: opts.intercept, has_group: group_col.is_some(), rows })
}

fn build(p: usize, intercept: bool, rows: &[&Row]) -> Result<Dataset> {
    let mut val_x = Vec::new();
    let mut val_y = Vec::new();
    let mut val_yt = Vec::new();
    let mut non_x = Vec::new();
    let mut non_yt = Vec::new();
    for r in rows {
        match r.y {
            Some(y) => {
                val_x.extend_from_slice(&r.x);
                val_y.push(y);
                val_yt.push(r.ytilde);
            }
            None => {
                non_x.extend_from_slice(&r.x);
                non_yt.push(r.ytilde);
            }
        }
    }
    Dataset::from_columns(p, intercept, val_x, val_y, val_yt, non_x, non_yt)
}

/// Reads a dataset; any `group` column is ignored.
pub fn read_dataset<R: Read>(reader: R, opts: ReadOptions) -> Result<Dataset> {
    let t = read_table(reader, opts)?;
    build(t.p, t.intercept, &t.rows.iter().collect::<Vec<_>>())
}

pub fn read_dataset_path(path: &Path, opts: ReadOptions) -> Result<Dataset> {
    let f = std::fs::File::open(path).map_err(|e| schema(format!("cannot open {}: {e}", path.display())))?;
    read_dataset(f, opts)
}

/// Reads a dataset split by its `group` column, groups in increasing id order.
pub fn read_grouped<R: Read>(reader: R, opts: ReadOptions) -> Result<(Vec<i64>, GroupedDataset)> {
    let t = read_table(reader, opts)?;
    if !t.has_group {
        return Err(schema("missing required column 'group'"));
    }
    let mut by_id: BTreeMap<i64, Vec<&Row>> = BTreeMap::new();
    for r in &t.rows {
        by_id.entry(r.group.expect("group column present")).or_default().push(r);
    }
    let mut ids = Vec::new();
    let mut groups = Vec::new();
    for (id, rows) in by_id {
        let d = build(t.p, t.intercept, &rows).map_err(|e| schema(format!("group {id}: {e}")))?;
        ids.push(id);
        groups.push(d);
    }
    Ok((ids, GroupedDataset::new(groups)?))
}

pub fn read_grouped_path(path: &Path, opts: ReadOptions) -> Result<(Vec<i64>, GroupedDataset)> {
    let f = std::fs::File::open(path).map_err(|e| schema(format!("cannot open {}: {e}", path.display())))?;
    read_grouped(f, opts)
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("write failed: {e}"))
}

fn write_rows_of<W: Write>(w: &mut csv::Writer<W>, data: &Dataset, group: Option<i64>) -> Result<()> {
    let skip = data.has_intercept() as usize;
    let mut push = |y: Option<bool>, yt: bool, x: &[f64]| -> Result<()> {
        let mut rec: Vec<String> = vec![y.map_or(String::new(), |v| (v as u8).to_string()), (yt as u8).to_string()];
        if let Some(g) = group {
            rec.push(g.to_string());
        }
        rec.extend(x[skip..].iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(io_err)
    };
    for r in data.validation() {
        push(Some(r.y), r.ytilde, r.x)?;
    }
    for r in data.nonvalidation() {
        push(None, r.ytilde, r.x)?;
    }
    Ok(())
}

fn header(p: usize, grouped: bool) -> Vec<String> {
    let mut h = vec!["y".to_string(), "ytilde".to_string()];
    if grouped {
        h.push("group".into());
    }
    h.extend((1..=p).map(|k| format!("x{k}")));
    h
}

/// Writes validation rows then non-validation rows. Reading the result back
/// with `intercept = data.has_intercept()` reproduces `data` exactly.
pub fn write_dataset<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(data.p() - data.has_intercept() as usize, false)).map_err(io_err)?;
    write_rows_of(&mut w, data, None)?;
    w.flush().map_err(io_err)
}

/// Writes every group with its id in a `group` column.
pub fn write_grouped<W: Write>(ids: &[i64], gd: &GroupedDataset, writer: W) -> Result<()> {
    if ids.len() != gd.k() {
        return Err(Error::DimensionMismatch { expected: gd.k(), got: ids.len() });
    }
    let first = &gd.groups()[0];
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(first.p() - first.has_intercept() as usize, true)).map_err(io_err)?;
    for (id, g) in ids.iter().zip(gd.groups()) {
        write_rows_of(&mut w, g, Some(*id))?;
    }
    w.flush().map_err(io_err)
}

/// Serializes any row type as CSV with a header.
pub fn write_table<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Pretty JSON whose floats carry 17 significant digits.
struct PreciseFormatter(PrettyFormatter<'static>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for PreciseFormatter {
    forward!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// JSON text for `value`; non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(io_err)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub beta: Vec<f64>,
    pub theta: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    /// `beta1`, ..., or a description of the functional.
    pub target: String,
    /// `WALD`, `DELTA` or `PERCENTILE`.
    pub kind: String,
    pub level: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDiagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub final_score_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    #[serde(rename = "B")]
    pub b: usize,
    pub successes: usize,
    pub nonconverged: usize,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEstimate {
    pub group: i64,
    pub n: usize,
    pub n1: usize,
    pub theta: [f64; 2],
}

/// Everything a `fit` or `bootstrap` run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub report_version: u32,
    pub software: String,
    pub command: String,
    pub method: Method,
    pub n: usize,
    pub n1: usize,
    pub p: usize,
    pub estimates: Estimates,
    pub covariance: Option<Vec<Vec<f64>>>,
    pub intervals: Vec<IntervalRow>,
    pub diagnostics: ReportDiagnostics,
    pub warnings: Vec<FitWarning>,
    pub groups: Option<Vec<GroupEstimate>>,
    pub bootstrap: Option<BootstrapSummary>,
    pub seed: Option<u64>,
    pub timing_seconds: Option<f64>,
}

pub fn software_version() -> String {
    format!("misclassit {}", env!("CARGO_PKG_VERSION"))
}

impl RunReport {
    /// A report holding `fit`'s estimates and diagnostics and nothing else.
    pub fn from_fit(command: &str, fit: &FitResult, n: usize, n1: usize) -> Self {
        Self {
            report_version: REPORT_VERSION,
            software: software_version(),
            command: command.to_string(),
            method: fit.method,
            n,
            n1,
            p: fit.beta_hat.len(),
            estimates: Estimates {
                beta: fit.beta_hat.iter().copied().collect(),
                theta: fit.theta_hat.map(|t| [t.theta1, t.theta2]),
            },
            covariance: None,
            intervals: Vec::new(),
            diagnostics: ReportDiagnostics {
                converged: fit.converged,
                iterations: fit.iterations,
                final_score_norm: fit.final_score_norm,
            },
            warnings: fit.warnings.clone(),
            groups: None,
            bootstrap: None,
            seed: None,
            timing_seconds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

/// What is printed instead of a report when a run fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub report_version: u32,
    pub error: ErrorBody,
}

impl ErrorReport {
    pub fn new(kind: &str, message: String, exit_code: i32) -> Self {
        Self { report_version: REPORT_VERSION, error: ErrorBody { kind: kind.to_string(), message, exit_code } }
    }
}
