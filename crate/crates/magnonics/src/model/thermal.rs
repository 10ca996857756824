//! Temperature dependence of the magnon linewidth and mode occupations.

use super::spectra::denominator;
use super::types::{HybridParams, ModelError, PhysicalConstants, TempModel};

/// Two-level-system contribution to the Kittel-mode linewidth:
///
/// γ_TLS(T) = γ_TLS(0) · tanh( h·f_fmr / (2 k_B T) )
///
/// The relaxation into the TLS bath tracks the bath polarization, saturating
/// at γ_TLS(0) for T → 0 and vanishing for T → ∞. T = 0 is defined by the
/// limit.
pub fn tls_linewidth(t_k: f64, m: &TempModel, consts: &PhysicalConstants) -> f64 {
    if t_k == 0.0 {
        return m.gamma_tls0;
    }
    let x = consts.planck_h * m.f_fmr / (2.0 * consts.boltzmann_kb * t_k);
    m.gamma_tls0 * x.tanh()
}

/// Total Kittel-mode linewidth γ_m(T) = γ_TLS(T) + γ_mm.
pub fn total_linewidth(t_k: f64, m: &TempModel, consts: &PhysicalConstants) -> f64 {
    tls_linewidth(t_k, m, consts) + m.gamma_mm
}

/// Bose-Einstein occupation n̄ = 1/(exp(hf/k_BT) − 1); zero at T = 0.
pub fn thermal_occupation(f: f64, t_k: f64, consts: &PhysicalConstants) -> f64 {
    if t_k == 0.0 {
        return 0.0;
    }
    let x = consts.planck_h * f / (consts.boltzmann_kb * t_k);
    1.0 / x.exp_m1()
}

/// Convert a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Convert a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

/// Mean intracavity photon number under a coherent probe of power `p_in_w`
/// entering through port 1:
///
/// n = κ₁ · (p_in / h·f_probe) / ( 2π · |D(f_probe)|² )
///
/// where D is the hybrid denominator in Hz units. The 2π converts the
/// Hz-unit susceptibility to the angular-rate form of input-output theory;
/// on bare-cavity resonance with the magnon far detuned this reduces to
/// 2κ₁P/(π·hf·κ_tot²).
pub fn intracavity_photons(
    p_in_w: f64,
    f_probe: f64,
    p: &HybridParams,
    consts: &PhysicalConstants,
) -> Result<f64, ModelError> {
    if p_in_w < 0.0 {
        return Err(ModelError::Domain("probe power must be >= 0".into()));
    }
    if f_probe <= 0.0 {
        return Err(ModelError::Domain("probe frequency must be > 0".into()));
    }
    let d = denominator(f_probe, p, &[])?;
    let flux = p_in_w / (consts.planck_h * f_probe);
    Ok(p.kappa_1 * flux / (2.0 * std::f64::consts::PI * d.norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_model() -> TempModel {
        TempModel { gamma_tls0: 0.63e6, gamma_mm: 0.39e6, f_fmr: 10.565e9 }
    }

    #[test]
    fn tls_limits_and_crossover() {
        let consts = PhysicalConstants::default();
        let m = paper_model();
        assert_eq!(tls_linewidth(0.0, &m, &consts), 0.63e6);
        // h*f/(2k_B) = 0.2535 K at 10.565 GHz; there tanh(1) applies.
        let t_star = consts.planck_h * m.f_fmr / (2.0 * consts.boltzmann_kb);
        assert_relative_eq!(t_star, 0.2535, max_relative = 1e-3);
        assert_relative_eq!(
            tls_linewidth(t_star, &m, &consts),
            0.63e6 * 1f64.tanh(),
            max_relative = 1e-12
        );
        assert!((tls_linewidth(t_star, &m, &consts) - 0.480e6).abs() < 1e3);
        assert!(tls_linewidth(1e12, &m, &consts) < 1.0);
    }

    #[test]
    fn total_linewidth_examples() {
        let consts = PhysicalConstants::default();
        let m = paper_model();
        assert_relative_eq!(total_linewidth(0.0, &m, &consts), 1.02e6, max_relative = 1e-12);
        // T = 1 K: 0.39 + 0.63*tanh(0.2535) MHz
        let g1 = total_linewidth(1.0, &m, &consts);
        assert!((g1 - 0.546e6).abs() < 1e3, "gamma(1K) = {g1}");
        let flat = TempModel { gamma_tls0: 0.0, ..m };
        assert_eq!(total_linewidth(0.01, &flat, &consts), 0.39e6);
        assert_eq!(total_linewidth(10.0, &flat, &consts), 0.39e6);
    }

    #[test]
    fn occupation_quantum_regime() {
        let consts = PhysicalConstants::default();
        // hf/k_B = 0.507 K at 10.565 GHz; at 10 mK the occupation is ~1e-22.
        let n = thermal_occupation(10.565e9, 0.010, &consts);
        assert!(n < 1e-20 && n > 1e-25, "n = {n}");
        assert_eq!(thermal_occupation(10.565e9, 0.0, &consts), 0.0);
    }

    #[test]
    fn occupation_unity_point_and_4k() {
        let consts = PhysicalConstants::default();
        // hf = k_B T ln2  =>  n = 1 exactly.
        let f = 10.565e9;
        let t = consts.planck_h * f / (consts.boltzmann_kb * std::f64::consts::LN_2);
        assert_relative_eq!(thermal_occupation(f, t, &consts), 1.0, max_relative = 1e-12);
        assert!((thermal_occupation(f, 4.0, &consts) - 7.39).abs() < 0.02);
    }

    #[test]
    fn photon_number_at_paper_drive() {
        let consts = PhysicalConstants::default();
        // -123 dBm at the cavity input, magnon far detuned.
        // "Far detuned" must beat the dispersive pull g^2/Delta << kappa/2,
        // which for g = 47 MHz means detunings well beyond the map range.
        let p = HybridParams {
            f_c: 10.565e9,
            kappa_1: 0.13e6,
            kappa_2: 1.5e6,
            kappa_int: 1.0e6,
            f_fmr: 10.565e9 + 100e9,
            gamma_m: 1.1e6,
            g_m: 47.0e6,
        };
        let p_in = dbm_to_watts(-123.0);
        assert_relative_eq!(p_in, 5.01e-16, max_relative = 1e-3);
        let n = intracavity_photons(p_in, p.f_c, &p, &consts).unwrap();
        assert!(n > 0.6 && n < 1.2, "n = {n}");
        assert_eq!(intracavity_photons(0.0, p.f_c, &p, &consts).unwrap(), 0.0);
        let n2 = intracavity_photons(2.0 * p_in, p.f_c, &p, &consts).unwrap();
        assert_relative_eq!(n2, 2.0 * n, max_relative = 1e-12);
    }

    #[test]
    fn dbm_round_trip() {
        for dbm in [-140.0, -123.0, -60.0, 0.0, 10.0] {
            assert_relative_eq!(watts_to_dbm(dbm_to_watts(dbm)), dbm, max_relative = 1e-12);
        }
    }
}
