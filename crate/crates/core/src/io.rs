//! On-disk formats of a run directory: field snapshots, the diagnostic
//! series and the manifest.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagRecord;
use crate::error::{Error, Result};
use crate::experiments::RunConfig;
use crate::grid::{Field, GridSpec};
use crate::stepper::BoundViolation;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SERIES_FILE: &str = "series.csv";

pub const SERIES_COLUMNS: [&str; 9] = [
    "step",
    "time",
    "mass_bulk",
    "mass_surf",
    "energy_bulk",
    "energy_surf",
    "energy_total",
    "steady_residual",
    "solver_iterations",
];

pub fn snapshot_name(step: u64) -> String {
    format!("snap_{step}.csv")
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn bad(path: &Path, message: impl Into<String>) -> Error {
    Error::Format { path: path.to_owned(), message: message.into() }
}

/// A field on the node grid together with its header metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub time: f64,
    pub step: u64,
    pub kappa: f64,
    pub surface: String,
    pub field: Field,
}

/// Writes `u` as `N+1` comma-separated rows of constant `y`, bottom row
/// first, behind a two-line `#` header.
pub fn write_snapshot(path: &Path, g: &GridSpec, u: &Field, time: f64, step: u64, kappa: f64, surface: &str) -> Result<()> {
    g.check_field(u)?;
    let side = g.side();
    let mut out = String::with_capacity(side * side * 25 + 64);
    out.push_str(&format!("# N={} t={time} step={step}\n# kappa={kappa} surface={surface}\n", g.n()));
    for row in u.values.chunks(side) {
        let line: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn header_fields<'a>(path: &Path, line: Option<&'a str>, which: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let line = line.ok_or_else(|| bad(path, format!("missing {which} header line")))?;
    let body = line.strip_prefix('#').ok_or_else(|| bad(path, format!("{which} header must start with '#'")))?;
    body.split_whitespace()
        .map(|kv| kv.split_once('=').ok_or_else(|| bad(path, format!("malformed header item `{kv}`"))))
        .collect()
}

fn lookup<'a>(path: &Path, items: &[(&'a str, &'a str)], key: &str) -> Result<&'a str> {
    items
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| bad(path, format!("header lacks `{key}`")))
}

fn parse_num<T: std::str::FromStr>(path: &Path, what: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| bad(path, format!("cannot parse {what} `{s}`")))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let first = header_fields(path, lines.next(), "first")?;
    let second = header_fields(path, lines.next(), "second")?;
    let n: usize = parse_num(path, "N", lookup(path, &first, "N")?)?;
    let time = parse_num(path, "t", lookup(path, &first, "t")?)?;
    let step = parse_num(path, "step", lookup(path, &first, "step")?)?;
    let kappa = parse_num(path, "kappa", lookup(path, &second, "kappa")?)?;
    let surface = lookup(path, &second, "surface")?.to_owned();
    let side = n + 1;
    let mut values = Vec::with_capacity(side * side);
    let mut rows = 0;
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(body.as_bytes());
    for record in reader.records() {
        let record = record.map_err(|e| bad(path, e.to_string()))?;
        if record.len() != side {
            return Err(bad(path, format!("row {rows} has {} values, expected {side}", record.len())));
        }
        for v in record.iter() {
            values.push(parse_num(path, "value", v)?);
        }
        rows += 1;
    }
    if rows != side {
        return Err(bad(path, format!("found {rows} rows, expected {side}")));
    }
    Ok(Snapshot { n, time, step, kappa, surface, field: Field::new(values) })
}

/// Appends diagnostic records to `series.csv`, flushing every row so that an
/// interrupted run leaves a readable prefix.
pub struct SeriesWriter {
    path: PathBuf,
    out: csv::Writer<File>,
}

impl SeriesWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = SeriesWriter { path: path.to_owned(), out: csv::Writer::from_writer(file) };
        w.row(SERIES_COLUMNS.iter().map(|s| s.to_string()))?;
        Ok(w)
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<()> {
        let res = self.out.write_record(fields).map_err(std::io::Error::from).and_then(|_| self.out.flush());
        res.map_err(|e| Error::io(&self.path, e))
    }

    pub fn append(&mut self, r: &DiagRecord) -> Result<()> {
        self.row([
            r.step.to_string(),
            fmt(r.time),
            fmt(r.mass_bulk),
            fmt(r.mass_surf),
            fmt(r.energy_bulk),
            fmt(r.energy_surf),
            fmt(r.energy_total),
            fmt(r.steady_residual),
            r.solver_iterations.to_string(),
        ])
    }
}

pub fn read_series(path: &Path) -> Result<Vec<DiagRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers().map_err(|e| bad(path, e.to_string()))?;
    if !header.iter().eq(SERIES_COLUMNS.iter().copied()) {
        return Err(bad(path, format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(k, r)| r.map_err(|e| bad(path, format!("row {}: {e}", k + 1))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    Steady,
    MaxSteps,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub step: u64,
    pub time: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub kappa: f64,
    pub started: String,
    pub finished: Option<String>,
    pub exit_reason: Option<ExitReason>,
    pub steps: u64,
    pub final_steady_residual: Option<f64>,
    pub snapshots: Vec<SnapshotEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_violation: Option<BoundViolation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Writes the manifest through a temporary file so readers never see a
/// partial document.
pub fn write_manifest(dir: &Path, m: &RunManifest) -> Result<()> {
    let path = dir.join(MANIFEST_FILE);
    let tmp = dir.join(".manifest.json.tmp");
    let text = serde_json::to_string_pretty(m).map_err(|e| bad(&path, e.to_string()))?;
    fs::write(&tmp, text + "\n").map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| bad(&path, e.to_string()))
}
