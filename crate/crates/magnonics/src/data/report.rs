//! Fit report documents.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::check_schema_version;
use super::{DataError, RunManifest};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Recognized values of [`ReportDoc::kind`].
pub const REPORT_KINDS: [&str; 4] = ["sweep-fit", "map-fit", "scaling-fit", "temperature-fit"];

/// Structured fit report: recovered parameters with standard errors, derived
/// quantities, convergence diagnostics, and the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDoc {
    pub schema_version: u32,
    pub kind: String,
    pub manifest: RunManifest,
    /// Fitted parameters; keys carry the unit suffix (e.g. `g_m_hz`).
    pub params: BTreeMap<String, f64>,
    /// One-sigma standard errors, same keys as `params`.
    pub errors: BTreeMap<String, f64>,
    /// Derived quantities (cooperativity, splitting, occupancies, ...).
    pub derived: BTreeMap<String, f64>,
    pub convergence: Convergence,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Per-column summaries (map fits only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<ColumnSummary>,
    /// Points excluded from a fit, reported with their model residuals.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<ResidualRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Convergence {
    pub converged: bool,
    pub stop_reason: String,
    pub iterations: u64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSummary {
    pub current_ma: f64,
    pub converged: bool,
    pub f_fmr_hz: f64,
    pub f_fmr_err_hz: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualRow {
    pub x: f64,
    pub observed: f64,
    pub model: f64,
    pub residual: f64,
}

pub fn write_report(path: impl AsRef<Path>, doc: &ReportDoc) -> Result<(), DataError> {
    let path = path.as_ref();
    fs::write(path, render_report(doc)?)
        .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })
}

/// Serialize a report to TOML text (deterministic: sorted maps, declared
/// field order).
pub fn render_report(doc: &ReportDoc) -> Result<String, DataError> {
    if !REPORT_KINDS.contains(&doc.kind.as_str()) {
        return Err(DataError::Invalid(format!("unknown report kind {:?}", doc.kind)));
    }
    toml::to_string_pretty(doc).map_err(|e| DataError::Document(e.to_string()))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ReportDoc, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
    parse_report(&text)
}

pub fn parse_report(text: &str) -> Result<ReportDoc, DataError> {
    check_schema_version(text, REPORT_SCHEMA_VERSION)?;
    let doc: ReportDoc = toml::from_str(text).map_err(|e| DataError::Document(e.to_string()))?;
    if !REPORT_KINDS.contains(&doc.kind.as_str()) {
        return Err(DataError::Invalid(format!("unknown report kind {:?}", doc.kind)));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::InputDigest;

    fn sample() -> ReportDoc {
        ReportDoc {
            schema_version: 1,
            kind: "sweep-fit".into(),
            manifest: RunManifest {
                toolkit_version: "0.1.0".into(),
                command_line: "magnonics fit sweep.csv --out fit.rpt".into(),
                inputs: vec![InputDigest::of("sweep.csv", b"demo")],
                timestamp: None,
                seeds: vec![42],
            },
            params: [("g_m_hz".to_string(), 47.0e6), ("gamma_m_hz".to_string(), 1.1e6)].into(),
            errors: [("g_m_hz".to_string(), 1.2e3), ("gamma_m_hz".to_string(), 0.8e3)].into(),
            derived: [("cooperativity".to_string(), 2975.08)].into(),
            convergence: Convergence {
                converged: true,
                stop_reason: "cost_tolerance".into(),
                iterations: 17,
                residual_norm: 3.4e-13,
            },
            notes: vec!["demo".into()],
            columns: vec![],
            excluded: vec![],
        }
    }

    #[test]
    fn report_round_trip() {
        let doc = sample();
        let text = render_report(&doc).unwrap();
        assert_eq!(parse_report(&text).unwrap(), doc);
    }

    #[test]
    fn report_rendering_is_byte_stable() {
        let doc = sample();
        assert_eq!(render_report(&doc).unwrap(), render_report(&doc.clone()).unwrap());
    }

    #[test]
    fn unknown_schema_version_rejected() {
        let text = render_report(&sample())
            .unwrap()
            .replace("schema_version = 1", "schema_version = 3");
        let err = parse_report(&text).unwrap_err();
        assert!(matches!(err, DataError::SchemaVersion { .. }), "{err:?}");
    }

    #[test]
    fn unknown_kind_rejected() {
        let text = render_report(&sample()).unwrap().replace("sweep-fit", "sweep-fit-x");
        let err = parse_report(&text).unwrap_err();
        assert!(err.to_string().contains("sweep-fit-x"), "{err}");
    }
}
