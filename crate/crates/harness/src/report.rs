//! Run reports and their CSV / JSON serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::HarnessError;

pub const CSV_HEADER: &str = "experiment,n,a,b,gamma_n,beta,t,f_center,estimate,stderr,reference,zscore,replicas,seed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub n: usize,
    pub a: f64,
    /// Schedule exponent; 0 when `gamma_n` is fixed.
    pub b: f64,
    pub gamma_n: f64,
    pub beta: f64,
    pub t: f64,
    pub f_center: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub reference: f64,
    pub zscore: f64,
    pub replicas: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    /// Derived numbers worth keeping next to the rows (calibration constants, fits, ...).
    pub metrics: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, String>,
    pub wall_clock_s: f64,
}

impl RunReport {
    pub fn new(experiment: impl Into<String>, config: BTreeMap<String, String>) -> Self {
        Self {
            experiment: experiment.into(),
            version: version().to_string(),
            config,
            rows: Vec::new(),
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            notes: BTreeMap::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    /// Finite values go to `metrics`; anything else is kept as text in `notes`.
    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        if value.is_finite() {
            self.metrics.insert(name.into(), value);
        } else {
            self.notes.insert(name.into(), fmt_f64(value));
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

pub fn version() -> &'static str {
    option_env!("ANHARMONIC_GIT_DESCRIBE").unwrap_or(concat!("v", env!("CARGO_PKG_VERSION")))
}

/// Seventeen significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut s = String::with_capacity(64 + rows.len() * 200);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.n,
            fmt_f64(r.a),
            fmt_f64(r.b),
            fmt_f64(r.gamma_n),
            fmt_f64(r.beta),
            fmt_f64(r.t),
            fmt_f64(r.f_center),
            fmt_f64(r.estimate),
            fmt_f64(r.stderr),
            fmt_f64(r.reference),
            fmt_f64(r.zscore),
            r.replicas,
            r.seed
        );
    }
    s
}

pub fn to_json(report: &RunReport) -> Result<String, HarnessError> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes `<out>/<experiment>.<csv|json>` and returns the path.
pub fn emit(report: &RunReport, out: &Path, format: OutputFormat) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(out).map_err(|e| HarnessError::Io(format!("{}: {e}", out.display())))?;
    let (ext, body) = match format {
        OutputFormat::Csv => ("csv", to_csv(&report.rows)),
        OutputFormat::Json => ("json", to_json(report)?),
    };
    let path = out.join(format!("{}.{ext}", report.experiment));
    std::fs::write(&path, body).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
