use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, RatioStats};
use crate::error::{Error, Result};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidInput(format!("unknown report format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Free-form instance label, e.g. a file name or `family/seed`.
    pub instance: String,
    pub stats: RatioStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: ExperimentConfig,
    pub results: Vec<ReportRow>,
}

impl Report {
    pub fn new(config: ExperimentConfig, results: Vec<ReportRow>) -> Self {
        Self {
            version: LIBRARY_VERSION.to_string(),
            config,
            results,
        }
    }
}

const CSV_HEADER: [&str; 14] = [
    "instance",
    "algorithm",
    "mode",
    "seed",
    "configured_trials",
    "mean",
    "std_error",
    "ci95_half_width",
    "min",
    "max",
    "trials",
    "opt_value",
    "source",
    "version",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| {
        if !e.is_io_error() {
            return Error::Csv(e);
        }
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            _ => unreachable!("checked is_io_error"),
        }
    }
}

fn write_csv(report: &Report, out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let c = &report.config;
    let source = c
        .source
        .as_ref()
        .map(|s| serde_json::to_string(s).expect("source serializes"))
        .unwrap_or_default();
    for row in &report.results {
        let s = &row.stats;
        w.write_record([
            row.instance.clone(),
            c.algorithm.to_string(),
            c.mode.to_string(),
            c.seed.to_string(),
            c.trials.to_string(),
            s.mean.to_string(),
            s.std_error.to_string(),
            s.ci95_half_width.to_string(),
            s.min.to_string(),
            s.max.to_string(),
            s.trials.to_string(),
            s.opt_value.to_string(),
            source.clone(),
            report.version.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report` to `path`. Output is byte-identical for identical inputs;
/// an empty CSV report is a header line.
pub fn export_report(report: &Report, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        ReportFormat::Csv => write_csv(report, &mut out).map_err(csv_err(path))?,
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n").map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

/// Reads a report written with [`ReportFormat::Json`].
pub fn import_report_json(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}
