//! File formats and persistence: sweep/map/series CSV, scenario and report
//! documents, and run manifests.
//!
//! All readers are stateless and return typed errors with a location instead
//! of panicking on malformed input. Numbers in the CSV formats are written
//! with 17 significant digits, so every write→read round trip reproduces the
//! original binary64 values exactly.

mod csv;
mod report;
mod scenario;

pub use csv::{
    read_map, read_map_from, read_scaling_points, read_sweep, read_sweep_from,
    read_temperature_points, write_map, write_map_to, write_scaling_points, write_sweep,
    write_sweep_to, write_temperature_points,
};
pub use report::{
    parse_report, read_report, render_report, write_report, ColumnSummary, Convergence, ReportDoc,
    ResidualRow, REPORT_KINDS,
};
pub use scenario::{
    parse_scenario, read_scenario, write_scenario, CalibrationSection, CurrentAxis, FrequencyGrid,
    HybridSection, NoiseSection, NuisanceSection, ProbeSection, ScenarioDoc, SpuriousSection,
};

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by readers and writers.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("structural error: {message}")]
    Structure { message: String },
    #[error("unsupported schema version {found} (supported: {supported})")]
    SchemaVersion { found: String, supported: String },
    #[error("document error: {0}")]
    Document(String),
    #[error("invalid value: {0}")]
    Invalid(String),
}

/// Free-form and instrument metadata carried by sweeps and maps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    /// Bias coil current (mA).
    pub current_ma: Option<f64>,
    /// Sample temperature (K).
    pub temperature_k: Option<f64>,
    /// Probe power at the cavity input (dBm).
    pub power_dbm: Option<f64>,
    /// Noise seed used to synthesize the data, when synthetic.
    pub seed: Option<u64>,
    /// Free-form key=value labels (sorted for deterministic output).
    pub labels: BTreeMap<String, String>,
}

/// A one-dimensional complex transmission trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    freqs: Vec<f64>,
    s21: Vec<Complex64>,
    pub meta: SweepMeta,
}

impl Sweep {
    pub fn new(freqs: Vec<f64>, s21: Vec<Complex64>, meta: SweepMeta) -> Result<Self, DataError> {
        if freqs.is_empty() {
            return Err(DataError::Invalid("sweep must contain at least one point".into()));
        }
        if freqs.len() != s21.len() {
            return Err(DataError::Invalid(format!(
                "frequency axis has {} points but s21 has {}",
                freqs.len(),
                s21.len()
            )));
        }
        validate_axis("freq_hz", &freqs)?;
        if s21.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(DataError::Invalid("s21 values must be finite".into()));
        }
        Ok(Self { freqs, s21, meta })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn s21(&self) -> &[Complex64] {
        &self.s21
    }

    pub fn span(&self) -> f64 {
        self.freqs[self.freqs.len() - 1] - self.freqs[0]
    }
}

/// A two-dimensional current × frequency transmission map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapData {
    currents: Vec<f64>,
    freqs: Vec<f64>,
    s21: Vec<Vec<Complex64>>,
    pub meta: SweepMeta,
}

impl MapData {
    pub fn new(
        currents: Vec<f64>,
        freqs: Vec<f64>,
        s21: Vec<Vec<Complex64>>,
        meta: SweepMeta,
    ) -> Result<Self, DataError> {
        if currents.is_empty() || freqs.is_empty() {
            return Err(DataError::Invalid("map axes must be non-empty".into()));
        }
        validate_axis("current_ma", &currents)?;
        validate_axis("freq_hz", &freqs)?;
        if s21.len() != currents.len() {
            return Err(DataError::Invalid(format!(
                "map has {} rows but {} currents",
                s21.len(),
                currents.len()
            )));
        }
        for (row, current) in s21.iter().zip(&currents) {
            if row.len() != freqs.len() {
                return Err(DataError::Structure {
                    message: format!(
                        "column at current {current} mA has {} points, expected {}",
                        row.len(),
                        freqs.len()
                    ),
                });
            }
        }
        Ok(Self { currents, freqs, s21, meta })
    }

    pub fn currents(&self) -> &[f64] {
        &self.currents
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn s21(&self) -> &[Vec<Complex64>] {
        &self.s21
    }

    /// Extract one current column as a standalone sweep.
    pub fn column(&self, index: usize) -> Sweep {
        let mut meta = self.meta.clone();
        meta.current_ma = Some(self.currents[index]);
        Sweep {
            freqs: self.freqs.clone(),
            s21: self.s21[index].clone(),
            meta,
        }
    }
}

fn validate_axis(name: &str, values: &[f64]) -> Result<(), DataError> {
    for pair in values.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(DataError::Invalid(format!(
                "{name} axis must be strictly increasing ({} then {})",
                pair[0], pair[1]
            )));
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DataError::Invalid(format!("{name} axis must be finite")));
    }
    Ok(())
}

/// Provenance block attached to every report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command_line: String,
    #[serde(default)]
    pub inputs: Vec<InputDigest>,
    /// RFC 3339 timestamp; omitted by default so identical runs produce
    /// byte-identical artifacts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

/// Content digest of one input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    /// FNV-1a 64-bit digest of the raw bytes, as 16 lowercase hex digits.
    pub fnv1a64: String,
}

impl InputDigest {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        Self { path: path.to_string(), fnv1a64: format!("{:016x}", fnv1a64(bytes)) }
    }
}

/// FNV-1a 64-bit content hash (offset 0xcbf29ce484222325, prime
/// 0x100000001b3), used for recomputable input digests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Serialize an f64 with 17 significant digits (exact binary64 round trip).
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_rejects_mismatched_lengths() {
        let err = Sweep::new(vec![1.0, 2.0], vec![Complex64::new(0.0, 0.0)], SweepMeta::default());
        assert!(err.is_err());
    }

    #[test]
    fn sweep_rejects_non_increasing_axis() {
        let err = Sweep::new(
            vec![2.0, 2.0],
            vec![Complex64::new(0.0, 0.0); 2],
            SweepMeta::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn map_reports_ragged_current() {
        let err = MapData::new(
            vec![0.0, 1.0],
            vec![1.0, 2.0],
            vec![vec![Complex64::new(0.0, 0.0); 2], vec![Complex64::new(0.0, 0.0); 1]],
            SweepMeta::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("current 1"), "{err}");
    }

    #[test]
    fn fnv_vectors() {
        // Reference values for the 64-bit FNV-1a parameters.
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn seventeen_digit_serialization_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1.0565e10, f64::MIN_POSITIVE, -2.63e6] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }
}
