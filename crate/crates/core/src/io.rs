//! Text file formats.
//!
//! All tables are whitespace- or comma-separated columns with `#` comment
//! lines. Metadata travels in `# key=value` header lines.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::forces::{ConductivitySeries, ForceError};
use crate::lifshitz::{ForceCurve, LifshitzError, RoughnessDistribution};
use crate::pipeline::{DeflectionTrace, PipelineError};
use crate::synth::GroundTruth;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header `{0}`")]
    MissingHeader(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Trace(#[from] PipelineError),
    #[error(transparent)]
    Lifshitz(#[from] LifshitzError),
    #[error(transparent)]
    Force(#[from] ForceError),
}

type Result<T> = std::result::Result<T, IoError>;

/// Column data with `# key=value` metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// Renders with `sep` between columns. The column-name line is a comment.
    pub fn render(&self, sep: &str) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            s.push_str(&format!("# {k}={v}\n"));
        }
        if !self.columns.is_empty() {
            s.push_str(&format!("# {}\n", self.columns.join(sep)));
        }
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            s.push_str(&cells.join(sep));
            s.push('\n');
        }
        s
    }

    /// Parses numeric rows of exactly `ncols` columns separated by commas
    /// and/or whitespace.
    pub fn parse(text: &str, ncols: usize) -> Result<Self> {
        let mut table = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some((k, v)) = c.split_once('=') {
                    table
                        .metadata
                        .push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let cells: Vec<&str> = line
                .split(|ch: char| ch == ',' || ch.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cells.len() != ncols {
                return Err(IoError::Parse {
                    line: i + 1,
                    message: format!("expected {ncols} columns, found {}", cells.len()),
                });
            }
            let row = cells
                .iter()
                .map(|c| {
                    c.parse::<f64>().map_err(|e| IoError::Parse {
                        line: i + 1,
                        message: format!("`{c}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            table.rows.push(row);
        }
        Ok(table)
    }
}

fn header_f64(t: &Table, key: &str) -> Result<f64> {
    let v = t
        .get(key)
        .ok_or_else(|| IoError::MissingHeader(key.into()))?;
    v.parse().map_err(|_| IoError::Parse {
        line: 0,
        message: format!("header `{key}` is not a number: `{v}`"),
    })
}

/// CSV `d_piezo_nm, V_det_V` with velocity and sample-rate headers.
pub fn render_trace(trace: &DeflectionTrace) -> String {
    let mut t = Table::new(&["d_piezo_nm", "V_det_V"])
        .meta("velocity_nm_s", trace.velocity())
        .meta("sample_rate_hz", trace.sample_rate());
    if !trace.label.is_empty() {
        t = t.meta("label", &trace.label);
    }
    t.rows = trace
        .piezo()
        .iter()
        .zip(trace.signal())
        .map(|(x, v)| vec![*x, *v])
        .collect();
    t.render(",")
}

pub fn parse_trace(text: &str) -> Result<DeflectionTrace> {
    let t = Table::parse(text, 2)?;
    let velocity = header_f64(&t, "velocity_nm_s")?;
    let rate = header_f64(&t, "sample_rate_hz")?;
    let label = t.get("label").unwrap_or_default().to_string();
    Ok(DeflectionTrace::new(
        t.column(0),
        t.column(1),
        velocity,
        rate,
        label,
    )?)
}

/// `d_nm  F_pN` with the curve's metadata as header lines.
pub fn render_curve(curve: &ForceCurve) -> String {
    let mut t = Table::new(&["d_nm", "F_pN"]);
    t.metadata = curve.metadata.clone();
    t.rows = curve
        .points()
        .iter()
        .map(|&(d, f)| vec![d * 1e9, f * 1e12])
        .collect();
    t.render("  ")
}

pub fn parse_curve(text: &str) -> Result<ForceCurve> {
    let t = Table::parse(text, 2)?;
    let mut curve = ForceCurve::new(t.rows.iter().map(|r| (r[0] * 1e-9, r[1] * 1e-12)).collect())?;
    curve.metadata = t.metadata;
    Ok(curve)
}

/// `molarity_M  conductivity_norm`
pub fn parse_conductivity(text: &str) -> Result<ConductivitySeries> {
    let t = Table::parse(text, 2)?;
    Ok(ConductivitySeries::new(
        t.rows.iter().map(|r| (r[0], r[1])).collect(),
    )?)
}

/// `displacement_nm  count` rows (pixel counts or fractions; normalized on
/// read).
pub fn parse_roughness(text: &str) -> Result<RoughnessDistribution> {
    let t = Table::parse(text, 2)?;
    let counts: Vec<(f64, f64)> = t.rows.iter().map(|r| (r[0] * 1e-9, r[1])).collect();
    Ok(RoughnessDistribution::from_counts(&counts)?)
}

pub fn render_truth(truth: &GroundTruth) -> Result<String> {
    Ok(serde_json::to_string_pretty(truth)?)
}

pub fn parse_truth(text: &str) -> Result<GroundTruth> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Writes via a temporary sibling file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let wrap = |source| IoError::File {
        path: path.display().to_string(),
        source,
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(wrap)
}
