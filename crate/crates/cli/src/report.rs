//! CSV tables and the run manifest.

use std::path::Path;

use goar_core::evaluation::{AgreementScores, CorrelationTable, DegradationCurve, Metric};
use serde::Serialize;

use crate::error::CliError;

pub const CURVES_FILE: &str = "curves.csv";
pub const AGREEMENT_FILE: &str = "agreement.csv";
pub const CORRELATIONS_FILE: &str = "correlations.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        let row: Vec<String> = row.into_iter().collect();
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row per curve point, grouped by strategy then method.
pub fn write_curves(path: &Path, curves: &[DegradationCurve]) -> Result<(), CliError> {
    let mut sorted: Vec<&DegradationCurve> = curves.iter().collect();
    sorted.sort_by(|a, b| (a.strategy.label(), &a.method).cmp(&(b.strategy.label(), &b.method)));
    let rows = sorted.into_iter().flat_map(|c| {
        c.points.iter().map(move |p| {
            vec![
                c.strategy.label().to_string(),
                c.method.clone(),
                p.level.to_string(),
                p.accuracy.to_string(),
                p.cumulative_misclassified.to_string(),
            ]
        })
    });
    write_rows(path, &["strategy", "method", "level", "accuracy", "cumulative_misclassified"], rows)
}

pub fn write_agreement(path: &Path, rows: &[(String, AgreementScores)]) -> Result<(), CliError> {
    let mut header = vec!["method"];
    header.extend(Metric::ALL.iter().map(|m| m.label()));
    let rows = rows.iter().map(|(method, s)| {
        std::iter::once(method.clone()).chain(Metric::ALL.iter().map(|&m| s.get(m).to_string()))
    });
    write_rows(path, &header, rows)
}

pub fn write_correlations(path: &Path, table: Option<&CorrelationTable>) -> Result<(), CliError> {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let rows = table.into_iter().flat_map(|t| &t.entries).map(|e| {
        vec![e.benchmark.clone(), e.metric.label().to_string(), cell(e.r), cell(e.std)]
    });
    write_rows(path, &["benchmark", "metric", "r", "std"], rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSeeds {
    pub strategy: String,
    pub method: String,
    /// Training seed of the model behind each level.
    pub seeds: Vec<u64>,
}

impl From<&DegradationCurve> for CurveSeeds {
    fn from(c: &DegradationCurve) -> Self {
        CurveSeeds {
            strategy: c.strategy.label().to_string(),
            method: c.method.clone(),
            seeds: c.seeds.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub os: &'static str,
    pub arch: &'static str,
    pub workers: usize,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            workers: rayon::current_num_threads(),
        }
    }
}

/// Everything needed to reproduce a run. `status` is `complete` or `failed`;
/// a failed run keeps whatever artifacts were written before the error.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub experiment: String,
    pub config: serde_json::Value,
    pub curve_seeds: Vec<CurveSeeds>,
    pub summary: serde_json::Value,
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
    pub environment: Environment,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::io(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
