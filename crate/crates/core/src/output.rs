//! CSV and JSON serialization of rates, sweeps, crossovers and validation reports.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::config::ConfigDocument;
use crate::error::{Error, Result};
use crate::protocol_mc::ValidationReport;
use crate::rates::{Protocol, RateBreakdown};
use crate::sweep::{CrossoverReport, StorageCurve, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Scientific notation with 17 significant digits, which round-trips every `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A header and string rows, written with the `csv` crate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

const RATE_COLUMNS: [&str; 17] = [
    "protocol",
    "source",
    "distance_km",
    "rate_per_pulse",
    "rate_per_second",
    "single_pair",
    "gain_z",
    "e11x",
    "e11z",
    "n_load",
    "n_read",
    "eta_m",
    "eta_m_prime",
    "eta_load_a",
    "eta_load_b",
    "storage_time",
    "extension",
];

/// One row per `(total distance, breakdown)`.
pub fn rate_table(points: &[(f64, RateBreakdown)]) -> Table {
    let rows = points
        .iter()
        .map(|(l, r)| {
            let m = r.memory;
            vec![
                r.protocol.to_string(),
                match r.source {
                    crate::params::SourceKind::SinglePhoton => "single".to_string(),
                    crate::params::SourceKind::Decoy => "decoy".to_string(),
                },
                num(*l),
                num(r.rate_per_pulse),
                num(r.rate_per_second),
                num(r.single_pair),
                opt(r.gain_z),
                num(r.e11x),
                num(r.e11z),
                opt(m.map(|m| m.n_load)),
                m.map(|m| m.n_read.to_string()).unwrap_or_default(),
                opt(m.map(|m| m.eta_m)),
                opt(m.map(|m| m.eta_m_prime)),
                opt(m.map(|m| m.eta_load_a)),
                opt(m.map(|m| m.eta_load_b)),
                opt(m.map(|m| m.storage_time)),
                r.extension.to_string(),
            ]
        })
        .collect();
    Table {
        header: RATE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

const SWEEP_FIELDS: [&str; 8] = [
    "rate_per_pulse",
    "rate_per_second",
    "single_pair",
    "gain_z",
    "e11x",
    "e11z",
    "n_load",
    "storage_time",
];

/// Wide table: one row per distance of every sweep, `<protocol>.<field>` columns.
pub fn sweep_table(protocols: &[Protocol], sweeps: &[SweepResult]) -> Table {
    let mut header = vec!["curve".to_string(), "distance_km".to_string()];
    for p in protocols {
        header.extend(SWEEP_FIELDS.iter().map(|f| format!("{p}.{f}")));
    }
    let mut rows = Vec::new();
    for s in sweeps {
        let curve = s.metadata.curve.clone().unwrap_or_default();
        for row in &s.rows {
            let mut r = vec![curve.clone(), num(row.distance_km)];
            for b in &row.results {
                let m = b.memory;
                r.extend([
                    num(b.rate_per_pulse),
                    num(b.rate_per_second),
                    num(b.single_pair),
                    opt(b.gain_z),
                    num(b.e11x),
                    num(b.e11z),
                    opt(m.map(|m| m.n_load)),
                    opt(m.map(|m| m.storage_time)),
                ]);
            }
            rows.push(r);
        }
    }
    Table { header, rows }
}

pub fn storage_table(curves: &[StorageCurve]) -> Table {
    let header = ["curve", "distance_km", "eta", "n_load", "storage_time", "light_time"];
    let rows = curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(|p| {
                vec![
                    c.label.clone().unwrap_or_default(),
                    num(p.distance_km),
                    num(p.eta),
                    num(p.n_load),
                    num(p.storage_time),
                    num(p.light_time),
                ]
            })
        })
        .collect();
    Table {
        header: header.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

pub fn crossover_table(reports: &[(Option<String>, CrossoverReport)]) -> Table {
    let header = [
        "curve",
        "kind",
        "objective",
        "location_km",
        "bracket_lo",
        "bracket_hi",
        "initial_lo",
        "initial_hi",
        "tolerance",
        "iterations",
    ];
    let rows = reports
        .iter()
        .map(|(label, r)| {
            let kind = serde_json::to_value(r.kind).expect("kind serializes");
            vec![
                label.clone().unwrap_or_default(),
                kind.as_str().unwrap_or_default().to_string(),
                r.objective.clone(),
                num(r.location_km),
                num(r.bracket.0),
                num(r.bracket.1),
                num(r.initial_bracket.0),
                num(r.initial_bracket.1),
                num(r.tolerance),
                r.iterations.to_string(),
            ]
        })
        .collect();
    Table {
        header: header.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

pub fn validation_table(reports: &[(Option<String>, ValidationReport)]) -> Table {
    let header = ["curve", "check", "closed_form", "estimate", "std_error", "z_score", "pass"];
    let rows = reports
        .iter()
        .flat_map(|(label, rep)| {
            rep.checks.iter().map(move |c| {
                vec![
                    label.clone().unwrap_or_default(),
                    c.name.clone(),
                    num(c.closed_form),
                    num(c.estimate),
                    num(c.std_error),
                    num(c.z_score),
                    c.pass.to_string(),
                ]
            })
        })
        .collect();
    Table {
        header: header.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

/// Provenance attached to every JSON document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub config: Vec<ConfigDocument>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope<T> {
    pub metadata: Metadata,
    pub result: T,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or to standard output when `path` is `None`.
pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    let res = match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    res.map_err(Error::Io)
}
