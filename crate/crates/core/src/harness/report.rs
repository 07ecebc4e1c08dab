//! Run reports, their JSON and CSV forms, and report comparison.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curvature::{CurvatureReport, WpReport};
use crate::error::{Error, Result};
use crate::family::identities::IdentityReport;
use crate::oracle::OracleEstimate;

use super::config::{ExperimentConfig, Suite};

/// One numeric check. `value` is `None` for verdicts and skipped checks; `note` says why.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn bound(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value: Some(value), tolerance, passed: value.is_finite() && value <= tolerance, note: None }
    }

    pub fn verdict(name: impl Into<String>, passed: bool, note: impl Into<String>) -> Self {
        Self { name: name.into(), value: None, tolerance: 0.0, passed, note: Some(note.into()) }
    }

    pub fn failed(name: impl Into<String>, error: &Error) -> Self {
        Self { name: name.into(), value: None, tolerance: 0.0, passed: false, note: Some(error.to_string()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub passed: bool,
    /// Set when the suite aborted; its checks up to that point are kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub identities: Vec<IdentityReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curvature: Vec<CurvatureReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub oracle: Vec<OracleEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wp: Option<WpReport>,
}

impl SuiteResult {
    pub fn new(suite: Suite) -> Self {
        Self { suite, passed: true, error: None, checks: Vec::new(), identities: Vec::new(), curvature: Vec::new(), oracle: Vec::new(), wp: None }
    }

    pub(crate) fn finish(mut self, outcome: Result<()>) -> Self {
        if let Err(e) = outcome {
            self.error = Some(e.to_string());
        }
        self.passed = self.error.is_none() && self.checks.iter().all(|c| c.passed);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub version: String,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
    /// Seconds per suite, present only for timed runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<BTreeMap<String, f64>>,
    pub config: ExperimentConfig,
}

impl RunReport {
    pub fn suite(&self, suite: Suite) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.suite == suite)
    }

    pub fn checks(&self) -> impl Iterator<Item = (Suite, &Check)> {
        self.suites.iter().flat_map(|s| s.checks.iter().map(move |c| (s.suite, c)))
    }

    pub fn failures(&self) -> impl Iterator<Item = (Suite, &Check)> {
        self.checks().filter(|(_, c)| !c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per check: suite, check, value, tolerance, pass. Aborted suites add one row
    /// carrying the error.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["suite", "check", "value", "tolerance", "pass"])?;
        for s in &self.suites {
            for check in &s.checks {
                let value = check.value.map(|v| format!("{v:e}")).unwrap_or_default();
                writer.write_record([s.suite.name(), &check.name, &value, &format!("{:e}", check.tolerance), &check.passed.to_string()])?;
            }
            if let Some(error) = &s.error {
                writer.write_record([s.suite.name(), &format!("error: {error}"), "", "", "false"])?;
            }
        }
        let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown format `{other}` (json or csv)"))),
        }
    }
}

pub fn render(report: &RunReport, format: Format) -> Result<String> {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

/// Writes the report to `path`, creating parent directories.
pub fn emit(report: &RunReport, format: Format, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(render(report, format)?.as_bytes())?;
    Ok(())
}

/// A check whose outcome differs between two reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckDelta {
    pub suite: Suite,
    pub name: String,
    pub left: Option<Check>,
    pub right: Option<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDiff {
    pub identical: bool,
    pub verdict_changed: bool,
    pub deltas: Vec<CheckDelta>,
}

/// Compares two reports check by check, ignoring timing. Values are compared exactly.
pub fn diff_reports(left: &RunReport, right: &RunReport) -> ReportDiff {
    let index = |r: &RunReport| -> BTreeMap<(Suite, String), Check> { r.checks().map(|(s, c)| ((s, c.name.clone()), c.clone())).collect() };
    let (a, b) = (index(left), index(right));
    let mut keys: Vec<&(Suite, String)> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let deltas: Vec<CheckDelta> = keys
        .into_iter()
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| CheckDelta { suite: k.0, name: k.1.clone(), left: a.get(k).cloned(), right: b.get(k).cloned() })
        .collect();
    let strip = |r: &RunReport| RunReport { timing: None, ..r.clone() };
    ReportDiff { identical: deltas.is_empty() && strip(left) == strip(right), verdict_changed: left.passed != right.passed, deltas }
}
