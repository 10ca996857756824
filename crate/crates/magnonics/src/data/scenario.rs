//! Scenario documents: the TOML description of a virtual experiment.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// On-disk description of a synthetic experiment. Frequencies are Hz,
/// currents mA, powers dBm at the cavity input, temperatures K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub schema_version: u32,
    pub hybrid: HybridSection,
    pub calibration: CalibrationSection,
    pub frequency_grid: FrequencyGrid,
    pub currents: CurrentAxis,
    #[serde(default)]
    pub spurious: Vec<SpuriousSection>,
    #[serde(default)]
    pub nuisance: NuisanceSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub probe: ProbeSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridSection {
    pub f_c_hz: f64,
    pub kappa_1_hz: f64,
    pub kappa_2_hz: f64,
    pub kappa_int_hz: f64,
    pub gamma_m_hz: f64,
    pub g_m_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub slope_mt_per_ma: f64,
    pub current_at_degeneracy_ma: f64,
}

/// Uniform frequency grid, inclusive of both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
}

impl FrequencyGrid {
    pub fn values(&self) -> Result<Vec<f64>, DataError> {
        linspace("frequency_grid", self.start_hz, self.stop_hz, self.points)
    }
}

/// Current axis: either an explicit list or a uniform range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum CurrentAxis {
    Range { start_ma: f64, stop_ma: f64, points: usize },
    List { values_ma: Vec<f64> },
}

impl CurrentAxis {
    pub fn values(&self) -> Result<Vec<f64>, DataError> {
        match self {
            CurrentAxis::Range { start_ma, stop_ma, points } => {
                linspace("currents", *start_ma, *stop_ma, *points)
            }
            CurrentAxis::List { values_ma } => Ok(values_ma.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpuriousSection {
    /// Coil current at which this mode crosses the cavity (mA).
    pub crossing_current_ma: f64,
    pub g_hz: f64,
    pub gamma_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuisanceSection {
    pub amplitude: f64,
    pub phase_rad: f64,
    pub electrical_delay_s: f64,
    pub background_re: f64,
    pub background_im: f64,
}

impl Default for NuisanceSection {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            phase_rad: 0.0,
            electrical_delay_s: 0.0,
            background_re: 0.0,
            background_im: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Standard deviation per quadrature of the additive complex noise.
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub power_dbm: f64,
    pub temperature_k: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { power_dbm: -123.0, temperature_k: 0.010 }
    }
}

fn linspace(name: &str, start: f64, stop: f64, points: usize) -> Result<Vec<f64>, DataError> {
    if points == 0 {
        return Err(DataError::Invalid(format!("{name}: points must be >= 1")));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    if !(stop > start) {
        return Err(DataError::Invalid(format!("{name}: stop must exceed start")));
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points).map(|i| start + step * i as f64).collect())
}

pub fn read_scenario(path: impl AsRef<Path>) -> Result<ScenarioDoc, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<ScenarioDoc, DataError> {
    check_schema_version(text, SCENARIO_SCHEMA_VERSION)?;
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| DataError::Document(e.to_string()))?;
    Ok(doc)
}

pub fn write_scenario(path: impl AsRef<Path>, doc: &ScenarioDoc) -> Result<(), DataError> {
    let path = path.as_ref();
    let text = toml::to_string_pretty(doc).map_err(|e| DataError::Document(e.to_string()))?;
    fs::write(path, text).map_err(|e| DataError::Io { path: path.display().to_string(), source: e })
}

/// Check schema_version before attempting the strict full parse, so version
/// mismatches surface as such instead of as unknown-field noise.
pub(crate) fn check_schema_version(text: &str, supported: u32) -> Result<(), DataError> {
    #[derive(Deserialize)]
    struct Probe {
        schema_version: Option<toml::Value>,
    }
    let probe: Probe = toml::from_str(text).map_err(|e| DataError::Document(e.to_string()))?;
    match probe.schema_version {
        Some(toml::Value::Integer(v)) if v == supported as i64 => Ok(()),
        Some(v) => Err(DataError::SchemaVersion {
            found: v.to_string(),
            supported: supported.to_string(),
        }),
        None => Err(DataError::Document("missing required key `schema_version`".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScenarioDoc {
        ScenarioDoc {
            schema_version: 1,
            hybrid: HybridSection {
                f_c_hz: 10.565e9,
                kappa_1_hz: 0.13e6,
                kappa_2_hz: 1.5e6,
                kappa_int_hz: 1.0e6,
                gamma_m_hz: 1.1e6,
                g_m_hz: 47.0e6,
            },
            calibration: CalibrationSection { slope_mt_per_ma: 1.42, current_at_degeneracy_ma: 0.0 },
            frequency_grid: FrequencyGrid { start_hz: 10.365e9, stop_hz: 10.765e9, points: 801 },
            currents: CurrentAxis::Range { start_ma: -5.0, stop_ma: 5.0, points: 41 },
            spurious: vec![SpuriousSection { crossing_current_ma: -1.6, g_hz: 2.0e6, gamma_hz: 1.5e6 }],
            nuisance: NuisanceSection::default(),
            noise: NoiseSection { sigma: 0.01, seed: 42 },
            probe: ProbeSection::default(),
        }
    }

    #[test]
    fn scenario_round_trip() {
        let doc = sample();
        let text = toml::to_string_pretty(&doc).unwrap();
        let back = parse_scenario(&text).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn unknown_key_rejected_with_name() {
        let mut text = toml::to_string_pretty(&sample()).unwrap();
        text.push_str("\n[hybrid2]\nbogus_key_xyz = 1.0\n");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("hybrid2"), "{err}");
        let text2 = toml::to_string_pretty(&sample())
            .unwrap()
            .replace("g_m_hz", "g_m_khz");
        let err2 = parse_scenario(&text2).unwrap_err();
        assert!(err2.to_string().contains("g_m_khz"), "{err2}");
    }

    #[test]
    fn missing_key_named() {
        let text = toml::to_string_pretty(&sample())
            .unwrap()
            .replace("slope_mt_per_ma = 1.42\n", "");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("slope_mt_per_ma"), "{err}");
    }

    #[test]
    fn wrong_schema_version_is_versioned_error() {
        let text = toml::to_string_pretty(&sample())
            .unwrap()
            .replace("schema_version = 1", "schema_version = 99");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, DataError::SchemaVersion { .. }), "{err:?}");
    }

    #[test]
    fn current_list_form_parses() {
        let text = toml::to_string_pretty(&sample()).unwrap().replace(
            "[currents]\nstart_ma = -5.0\nstop_ma = 5.0\npoints = 41",
            "[currents]\nvalues_ma = [-1.0, 0.0, 1.0]",
        );
        let doc = parse_scenario(&text).unwrap();
        assert_eq!(doc.currents.values().unwrap(), vec![-1.0, 0.0, 1.0]);
    }
}
