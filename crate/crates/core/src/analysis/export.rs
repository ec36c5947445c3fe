use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{ControllabilityReport, ExpressiveRangeReport};
use crate::sim::Metric;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("could not write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not encode report: {0}")]
    Encode(String),
}

impl ExportError {
    pub fn code(&self) -> &'static str {
        match self {
            ExportError::Io(_) => "IO_ERROR",
            ExportError::Encode(_) => "ENCODE_ERROR",
        }
    }
}

/// A report with a flat row form.
pub trait Tabular {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<String>>;
}

fn metric_columns() -> impl Iterator<Item = String> {
    Metric::ALL.into_iter().map(|m| m.name().to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Tabular for ExpressiveRangeReport {
    fn header(&self) -> Vec<String> {
        ["index", "playable", "pathLength"].into_iter().map(String::from).chain(metric_columns()).collect()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.designs
            .iter()
            .map(|d| {
                [d.index.to_string(), d.playable.to_string(), d.path_length.to_string()]
                    .into_iter()
                    .chain(d.mean_metrics.to_array().iter().map(f64::to_string))
                    .collect()
            })
            .collect()
    }
}

impl Tabular for ControllabilityReport {
    fn header(&self) -> Vec<String> {
        [
            "mode",
            "game",
            "metric",
            "direction",
            "wLow",
            "wHigh",
            "lowScore",
            "highScore",
            "delta",
            "meanDelta",
            "stdDev",
            "pValue",
        ]
        .into_iter()
        .map(String::from)
        .collect()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for g in 0..self.n_games {
            for m in &self.metrics {
                rows.push(vec![
                    self.mode.to_string(),
                    g.to_string(),
                    m.metric.name().to_string(),
                    format!("{:?}", m.direction).to_lowercase(),
                    self.w_low.to_string(),
                    self.w_high.to_string(),
                    m.low_scores[g].to_string(),
                    m.high_scores[g].to_string(),
                    m.deltas[g].to_string(),
                    opt(m.mean_delta),
                    opt(m.std_dev),
                    m.p_value.to_string(),
                ]);
            }
        }
        rows
    }
}

/// Renders `report` as CSV (one row per design, or per game and metric) or
/// as pretty JSON. The same report always renders to the same bytes.
pub fn render_report<R: Tabular + Serialize>(
    report: &R,
    format: ExportFormat,
) -> Result<String, ExportError> {
    match format {
        ExportFormat::Json => {
            let mut s =
                serde_json::to_string_pretty(report).map_err(|e| ExportError::Encode(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        ExportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(report.header()).map_err(|e| ExportError::Encode(e.to_string()))?;
            for row in report.rows() {
                w.write_record(row).map_err(|e| ExportError::Encode(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| ExportError::Encode(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| ExportError::Encode(e.to_string()))
        }
    }
}

pub fn export_report<R: Tabular + Serialize>(
    report: &R,
    format: ExportFormat,
    path: &Path,
) -> Result<(), ExportError> {
    std::fs::write(path, render_report(report, format)?)?;
    Ok(())
}
