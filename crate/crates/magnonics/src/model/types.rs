//! Domain types for the hybrid magnon-photon system.
//!
//! All rates and frequencies are stored as ordinary (already divided by 2π)
//! frequencies in Hz. The transmission model is a ratio of rates, so no 2π
//! factors enter it; thermal formulas use h·f directly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from the closed-form physics layer.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    /// The model denominator has an exact pole at the requested frequency
    /// (zero-damping resonance). Raised instead of returning infinities.
    #[error("singular model at f = {f_hz} Hz: {context}")]
    SingularModel { f_hz: f64, context: String },
    /// An argument is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A parameter set violates its invariants.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Fundamental constants used by the toolkit.
///
/// The gyromagnetic ratio is the electron value 28.0 GHz/T used throughout
/// the Kittel-mode field calibration and the single-spin coupling estimate;
/// `Default` yields CODATA values for the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Planck constant h (J·s).
    pub planck_h: f64,
    /// Boltzmann constant k_B (J/K).
    pub boltzmann_kb: f64,
    /// Vacuum permeability μ₀ (T²·m³/J).
    pub vacuum_permeability_mu0: f64,
    /// Electron gyromagnetic ratio γ_e (Hz/T), fixed at 28.0×10⁹.
    pub gyromagnetic_gamma_e: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            planck_h: 6.626_070_15e-34,
            boltzmann_kb: 1.380_649e-23,
            vacuum_permeability_mu0: 1.256_637_062_12e-6,
            gyromagnetic_gamma_e: 28.0e9,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [
            self.planck_h,
            self.boltzmann_kb,
            self.vacuum_permeability_mu0,
            self.gyromagnetic_gamma_e,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ModelError::InvalidParams(
                "physical constants must be finite and strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// Gyromagnetic ratio in Hz per mT, the unit the field calibration uses.
    pub fn gamma_e_hz_per_mt(&self) -> f64 {
        self.gyromagnetic_gamma_e * 1e-3
    }
}

/// Parameters of the hybridized cavity-magnon system.
///
/// `kappa_1` and `kappa_2` are the input and output port couplings,
/// `kappa_int` the internal cavity loss; the total cavity linewidth is their
/// sum (FWHM, Hz). `gamma_m` is the Kittel-mode linewidth and `g_m` the
/// collective coupling strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridParams {
    /// Cavity resonance frequency (Hz).
    pub f_c: f64,
    /// Input port coupling rate (Hz).
    pub kappa_1: f64,
    /// Output port coupling rate (Hz).
    pub kappa_2: f64,
    /// Internal cavity loss rate (Hz).
    pub kappa_int: f64,
    /// Kittel-mode (FMR) frequency (Hz).
    pub f_fmr: f64,
    /// Kittel-mode linewidth (Hz).
    pub gamma_m: f64,
    /// Magnon-photon coupling strength (Hz).
    pub g_m: f64,
}

impl HybridParams {
    /// Total cavity linewidth κ₁ + κ₂ + κ_int (Hz).
    pub fn kappa_total(&self) -> f64 {
        self.kappa_1 + self.kappa_2 + self.kappa_int
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("f_c", self.f_c),
            ("kappa_1", self.kappa_1),
            ("kappa_2", self.kappa_2),
            ("kappa_int", self.kappa_int),
            ("f_fmr", self.f_fmr),
            ("gamma_m", self.gamma_m),
            ("g_m", self.g_m),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(ModelError::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.f_c <= 0.0 || self.f_fmr <= 0.0 {
            return Err(ModelError::InvalidParams(
                "mode frequencies must be strictly positive".into(),
            ));
        }
        if self.kappa_1 < 0.0
            || self.kappa_2 < 0.0
            || self.kappa_int < 0.0
            || self.gamma_m < 0.0
            || self.g_m < 0.0
        {
            return Err(ModelError::InvalidParams(
                "rates and coupling must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// A weakly coupled extra magnetostatic mode producing a small anticrossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpuriousMode {
    /// Mode frequency (Hz).
    pub f_mode: f64,
    /// Coupling to the cavity (Hz).
    pub g: f64,
    /// Mode linewidth (Hz).
    pub gamma: f64,
}

impl SpuriousMode {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.f_mode.is_finite() && self.g.is_finite() && self.gamma.is_finite()) {
            return Err(ModelError::InvalidParams("spurious mode fields must be finite".into()));
        }
        if self.g < 0.0 || self.gamma <= 0.0 {
            return Err(ModelError::InvalidParams(
                "spurious mode requires g >= 0 and gamma > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Rectangular cavity dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGeom {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
}

impl CavityGeom {
    /// Mode volume (m³), taken as the geometric volume.
    pub fn volume(&self) -> f64 {
        self.lx * self.ly * self.lz
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if [self.lx, self.ly, self.lz].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ModelError::InvalidParams(
                "cavity dimensions must be finite and strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Ferrimagnetic sphere sample: diameter plus net spin density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    /// Sphere diameter (m).
    pub diameter: f64,
    /// Net spin density in Bohr magnetons per m³.
    pub spin_density: f64,
}

impl SphereSpec {
    /// Net spin density of YIG, 2.1×10²² μ_B/cm³ expressed per m³.
    pub const YIG_SPIN_DENSITY: f64 = 2.1e28;

    pub fn yig(diameter_m: f64) -> Self {
        Self { diameter: diameter_m, spin_density: Self::YIG_SPIN_DENSITY }
    }

    /// Sphere volume (π/6)·d³ (m³).
    pub fn volume(&self) -> f64 {
        std::f64::consts::FRAC_PI_6 * self.diameter.powi(3)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.diameter.is_finite() && self.diameter >= 0.0) {
            return Err(ModelError::InvalidParams("diameter must be finite and >= 0".into()));
        }
        if !(self.spin_density.is_finite() && self.spin_density > 0.0) {
            return Err(ModelError::InvalidParams("spin density must be > 0".into()));
        }
        Ok(())
    }
}

/// Linear field-to-current calibration for the bias coil.
///
/// The absolute field offset absorbs the anisotropy field, so the calibration
/// is parameterized by the current at which the Kittel mode is degenerate
/// with the cavity rather than by the applied field itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldCalib {
    /// Field-to-current conversion ratio (mT/mA).
    pub slope: f64,
    /// Coil current at which f_fmr equals the paired cavity frequency (mA).
    pub current_at_degeneracy: f64,
    /// Effective static field at zero current (mT).
    pub field_offset: f64,
}

impl FieldCalib {
    /// Build a calibration from the degeneracy condition
    /// `kittel_frequency(current_at_degeneracy) == f_c`.
    pub fn from_degeneracy(
        slope_mt_per_ma: f64,
        current_at_degeneracy_ma: f64,
        f_c_hz: f64,
        consts: &PhysicalConstants,
    ) -> Self {
        let field_offset =
            f_c_hz / consts.gamma_e_hz_per_mt() - slope_mt_per_ma * current_at_degeneracy_ma;
        Self { slope: slope_mt_per_ma, current_at_degeneracy: current_at_degeneracy_ma, field_offset }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.slope.is_finite() && self.slope != 0.0)
            || !self.current_at_degeneracy.is_finite()
            || !self.field_offset.is_finite()
        {
            return Err(ModelError::InvalidParams(
                "field calibration requires finite fields and nonzero slope".into(),
            ));
        }
        Ok(())
    }
}

/// Kittel-mode frequency at the given coil current (Hz).
///
/// The FMR frequency is linear in the static field:
/// `f = γ_e · (field_offset + slope · current)`.
pub fn kittel_frequency(current_ma: f64, calib: &FieldCalib, consts: &PhysicalConstants) -> f64 {
    consts.gamma_e_hz_per_mt() * (calib.field_offset + calib.slope * current_ma)
}

/// Two-parameter temperature model of the Kittel-mode linewidth: a saturable
/// two-level-system term plus a temperature-independent surface-scattering
/// floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempModel {
    /// Zero-temperature TLS contribution γ_TLS(0) (Hz).
    pub gamma_tls0: f64,
    /// Temperature-independent magnon-magnon scattering term γ_mm (Hz).
    pub gamma_mm: f64,
    /// Resonance frequency entering the tanh polarization factor (Hz).
    pub f_fmr: f64,
}

impl TempModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.gamma_tls0.is_finite() && self.gamma_tls0 >= 0.0)
            || !(self.gamma_mm.is_finite() && self.gamma_mm >= 0.0)
            || !(self.f_fmr.is_finite() && self.f_fmr > 0.0)
        {
            return Err(ModelError::InvalidParams(
                "temperature model requires gamma_tls0 >= 0, gamma_mm >= 0, f_fmr > 0".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_total_is_sum_of_ports_and_internal() {
        let p = HybridParams {
            f_c: 10.565e9,
            kappa_1: 0.13e6,
            kappa_2: 1.5e6,
            kappa_int: 1.0e6,
            f_fmr: 10.565e9,
            gamma_m: 1.1e6,
            g_m: 47.0e6,
        };
        assert!((p.kappa_total() - 2.63e6).abs() < 1e-6);
        p.validate().unwrap();
    }

    #[test]
    fn negative_rate_rejected() {
        let p = HybridParams {
            f_c: 1e9,
            kappa_1: -1.0,
            kappa_2: 0.0,
            kappa_int: 0.0,
            f_fmr: 1e9,
            gamma_m: 0.0,
            g_m: 0.0,
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn degeneracy_condition_holds_by_construction() {
        let consts = PhysicalConstants::default();
        let calib = FieldCalib::from_degeneracy(1.42, 0.0, 10.565e9, &consts);
        let f0 = kittel_frequency(calib.current_at_degeneracy, &calib, &consts);
        assert!((f0 - 10.565e9).abs() < 1e-3);
        // df/dI = gamma_e * slope = 28.0 MHz/mT * 1.42 mT/mA
        let df = kittel_frequency(1.0, &calib, &consts) - f0;
        assert!((df - 39.76e6).abs() < 1.0);
    }

    #[test]
    fn kittel_at_minus_3p5_ma() {
        let consts = PhysicalConstants::default();
        let calib = FieldCalib::from_degeneracy(1.42, 0.0, 10.565e9, &consts);
        let f = kittel_frequency(-3.5, &calib, &consts);
        // 10.565 GHz - 3.5 * 39.76 MHz = 10.42584 GHz
        assert!((f - 10.42584e9).abs() < 1e3);
    }

    #[test]
    fn sphere_volume_cubic_in_diameter() {
        let s = SphereSpec::yig(1.0e-3);
        let s_half = SphereSpec::yig(0.5e-3);
        assert!((s.volume() / s_half.volume() - 8.0).abs() < 1e-12);
    }
}
