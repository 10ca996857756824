//! Bundled demonstration scenarios with the published device parameters:
//! a 10.565 GHz TE₁₀₁ copper cavity with asymmetric ports (0.13 / 1.5 MHz,
//! 1.0 MHz internal loss) strongly coupled (47 MHz) to the Kittel mode of a
//! 0.5 mm YIG sphere.
//!
//! The CLI exposes these as `--preset fig2|fig3|fig4`: the avoided-crossing
//! map, the coupling-versus-diameter series, and the linewidth-versus-
//! temperature series.

use crate::data::{
    CalibrationSection, CurrentAxis, FrequencyGrid, HybridSection, NoiseSection, ProbeSection,
    ScenarioDoc, SpuriousSection,
};
use crate::model::{HybridParams, TempModel};

/// Published hybrid parameters at the degeneracy point.
pub fn paper_hybrid() -> HybridParams {
    HybridParams {
        f_c: 10.565e9,
        kappa_1: 0.13e6,
        kappa_2: 1.5e6,
        kappa_int: 1.0e6,
        f_fmr: 10.565e9,
        gamma_m: 1.1e6,
        g_m: 47.0e6,
    }
}

/// Avoided-crossing map: currents −5..5 mA, 0.5 MHz frequency steps, three
/// weak spurious crossings, light noise.
pub fn splitting_map() -> ScenarioDoc {
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
        spurious: vec![
            SpuriousSection { crossing_current_ma: -1.6, g_hz: 2.0e6, gamma_hz: 1.5e6 },
            SpuriousSection { crossing_current_ma: 2.3, g_hz: 1.6e6, gamma_hz: 1.5e6 },
            SpuriousSection { crossing_current_ma: 3.3, g_hz: 1.3e6, gamma_hz: 1.5e6 },
        ],
        nuisance: Default::default(),
        noise: NoiseSection { sigma: 0.005, seed: 42 },
        probe: ProbeSection { power_dbm: -123.0, temperature_k: 0.010 },
    }
}

/// Coupling-scaling series inputs.
#[derive(Debug, Clone)]
pub struct ScalingPreset {
    pub diameters_m: Vec<f64>,
    pub g0_hz: f64,
    pub sigma: f64,
    pub seed: u64,
}

/// Sphere-diameter series with the fitted 39 mHz single-spin slope.
pub fn coupling_scaling() -> ScalingPreset {
    ScalingPreset {
        diameters_m: vec![0.5e-3, 0.75e-3, 1.0e-3, 1.5e-3],
        g0_hz: 39e-3,
        sigma: 0.0,
        seed: 42,
    }
}

/// Temperature-series inputs.
#[derive(Debug, Clone)]
pub struct TemperaturePreset {
    pub temps_k: Vec<f64>,
    pub model: TempModel,
    pub sigma_hz: f64,
    pub seed: u64,
    pub cutoff_k: f64,
}

/// Kittel-linewidth series, 10 mK to 2 K (points above the 1 K fit cutoff
/// are reported as residuals).
pub fn linewidth_temperature() -> TemperaturePreset {
    let mut temps_k: Vec<f64> = Vec::new();
    // 12 log-spaced points from 10 mK to 1 K, then a few above the cutoff.
    let (lo, hi, n) = (0.010f64, 1.0f64, 12usize);
    for i in 0..n {
        let t = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        temps_k.push(t);
    }
    temps_k.extend([1.4, 2.0]);
    TemperaturePreset {
        temps_k,
        model: TempModel { gamma_tls0: 0.63e6, gamma_mm: 0.39e6, f_fmr: 10.565e9 },
        sigma_hz: 0.0,
        seed: 42,
        cutoff_k: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::MapScenario;

    #[test]
    fn presets_validate() {
        let doc = splitting_map();
        let scenario = MapScenario::from_doc(&doc).unwrap();
        assert_eq!(scenario.currents.len(), 41);
        assert_eq!(scenario.freq_grid.len(), 801);
        paper_hybrid().validate().unwrap();
        let t = linewidth_temperature();
        assert!(t.temps_k.windows(2).all(|w| w[1] > w[0]));
    }
}
