//! Data-driven starting point for sweep fits.
//!
//! The guess locates the two most prominent |S21| maxima: the midpoint seeds
//! the cavity frequency, half the separation seeds the coupling, and the
//! half-prominence widths seed the linewidths. Spectra with a single usable
//! extremum fall back to a bare-cavity seed (g = 0); featureless spectra get
//! a flagged low-confidence fallback.

use num_complex::Complex64;

use crate::data::Sweep;
use crate::model::HybridParams;

use super::{CalibrationNuisance, FitError};

/// How much structure the guess found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessQuality {
    /// Two resolved modes; the coupling seed is meaningful.
    TwoPeaks,
    /// One resolved mode; coupling seeded at zero.
    SinglePeak,
    /// No structure above the noise floor; fallback seed.
    LowConfidence,
}

/// Starting point produced by [`initial_guess`].
#[derive(Debug, Clone)]
pub struct SweepGuess {
    pub params: HybridParams,
    pub nuisance: CalibrationNuisance,
    pub quality: GuessQuality,
}

struct Peak {
    index: usize,
    height: f64,
    prominence: f64,
    half_width_hz: f64,
}

/// Local maxima of `mag` with their prominences and half-prominence widths.
fn find_peaks(freqs: &[f64], mag: &[f64]) -> Vec<Peak> {
    let n = mag.len();
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(mag[i] > mag[i - 1] && mag[i] >= mag[i + 1]) {
            continue;
        }
        // Prominence: drop to the highest valley separating this peak from
        // higher ground on either side (or from the record edge).
        let mut left_min = mag[i];
        let mut j = i;
        while j > 0 {
            j -= 1;
            left_min = left_min.min(mag[j]);
            if mag[j] > mag[i] {
                break;
            }
        }
        let mut right_min = mag[i];
        let mut j = i;
        while j + 1 < n {
            j += 1;
            right_min = right_min.min(mag[j]);
            if mag[j] > mag[i] {
                break;
            }
        }
        let prominence = mag[i] - left_min.max(right_min);
        if prominence <= 0.0 {
            continue;
        }
        let half = mag[i] - 0.5 * prominence;
        // Interpolated crossings of the half-prominence level.
        let mut f_left = freqs[0];
        for k in (0..i).rev() {
            if mag[k] <= half {
                let t = (half - mag[k]) / (mag[k + 1] - mag[k]);
                f_left = freqs[k] + t * (freqs[k + 1] - freqs[k]);
                break;
            }
        }
        let mut f_right = freqs[n - 1];
        for k in i + 1..n {
            if mag[k] <= half {
                let t = (mag[k - 1] - half) / (mag[k - 1] - mag[k]);
                f_right = freqs[k - 1] + t * (freqs[k] - freqs[k - 1]);
                break;
            }
        }
        peaks.push(Peak {
            index: i,
            height: mag[i],
            prominence,
            half_width_hz: f_right - f_left,
        });
    }
    peaks
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Robust per-point noise estimate from first differences.
fn noise_floor(mag: &[f64]) -> f64 {
    let mut diffs: Vec<f64> = mag.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if diffs.is_empty() {
        return 0.0;
    }
    // MAD of a normal difference: sigma * sqrt(2) * 0.6745^-1-ish; the
    // constant only needs to be right to a factor of order one.
    median(&mut diffs) * 1.4826 / std::f64::consts::SQRT_2
}

/// Build a fit starting point from the data alone.
///
/// Requires at least 16 points. The returned port split is the uninformative
/// equal thirds: transmission data constrain only κ_tot and √(κ₁κ₂)·A, so
/// callers with port knowledge should seed the split themselves.
pub fn initial_guess(sweep: &Sweep) -> Result<SweepGuess, FitError> {
    if sweep.len() < 16 {
        return Err(FitError::InvalidInput(format!(
            "initial guess needs at least 16 points, got {}",
            sweep.len()
        )));
    }
    let freqs = sweep.freqs();
    let span = sweep.span();

    // Background from the off-resonant tails (outer 10%, at least 4 points
    // per side).
    let tail = (sweep.len() / 10).max(4).min(sweep.len() / 2);
    let mut tail_re: Vec<f64> = Vec::with_capacity(2 * tail);
    let mut tail_im: Vec<f64> = Vec::with_capacity(2 * tail);
    for z in sweep.s21()[..tail].iter().chain(&sweep.s21()[sweep.len() - tail..]) {
        tail_re.push(z.re);
        tail_im.push(z.im);
    }
    let background = Complex64::new(median(&mut tail_re), median(&mut tail_im));

    let mag: Vec<f64> = sweep.s21().iter().map(|z| (z - background).norm()).collect();
    let floor = noise_floor(&mag);

    let mut peaks = find_peaks(freqs, &mag);
    peaks.retain(|p| p.prominence > 8.0 * floor);
    peaks.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));

    let fallback_nuisance = |amplitude: f64| CalibrationNuisance {
        amplitude: if amplitude > 0.0 && amplitude.is_finite() { amplitude } else { 1.0 },
        phase: 0.0,
        electrical_delay: 0.0,
        background_re: background.re,
        background_im: background.im,
    };

    if peaks.is_empty() {
        // Featureless: seed mid-span with broad linewidths.
        let f_mid = 0.5 * (freqs[0] + freqs[freqs.len() - 1]);
        let params = HybridParams {
            f_c: f_mid,
            kappa_1: span / 30.0,
            kappa_2: span / 30.0,
            kappa_int: span / 30.0,
            f_fmr: f_mid,
            gamma_m: span / 40.0,
            g_m: 0.0,
        };
        return Ok(SweepGuess {
            params,
            nuisance: fallback_nuisance(1.0),
            quality: GuessQuality::LowConfidence,
        });
    }

    // Keep the second peak only if it rises clearly above the floor; among
    // prominence ties, prefer the widest separation from the first.
    let first = &peaks[0];
    let second = if peaks.len() > 1 {
        let cutoff = peaks[1].prominence * (1.0 - 1e-9);
        peaks[1..]
            .iter()
            .filter(|p| p.prominence >= cutoff)
            .max_by(|a, b| {
                let da = (freqs[a.index] - freqs[first.index]).abs();
                let db = (freqs[b.index] - freqs[first.index]).abs();
                da.total_cmp(&db)
            })
    } else {
        None
    };

    match second {
        Some(second) => {
            let f1 = freqs[first.index];
            let f2 = freqs[second.index];
            let f_c = 0.5 * (f1 + f2);
            let g = 0.5 * (f2 - f1).abs();
            // At degeneracy each hybrid mode has FWHM (kappa+gamma)/2, so
            // the width sum seeds the loss budget; split it 3:1 in favour of
            // the cavity.
            // |S21| is a sqrt-Lorentzian per mode: its half-prominence
            // width is sqrt(3) times the underlying FWHM (kappa+gamma)/2.
            let width_sum = (first.half_width_hz + second.half_width_hz).abs().max(span * 1e-4)
                / 3f64.sqrt();
            let kappa_tot = 0.75 * width_sum;
            let gamma = 0.25 * width_sum;
            let params = HybridParams {
                f_c,
                kappa_1: kappa_tot / 3.0,
                kappa_2: kappa_tot / 3.0,
                kappa_int: kappa_tot / 3.0,
                f_fmr: f_c,
                gamma_m: gamma,
                g_m: g,
            };
            let amplitude = amplitude_from_peak(&params, f1, first.height);
            Ok(SweepGuess {
                params,
                nuisance: fallback_nuisance(amplitude),
                quality: GuessQuality::TwoPeaks,
            })
        }
        None => {
            let f_c = freqs[first.index];
            let kappa_tot = first.half_width_hz.abs().max(span * 1e-4) / 3f64.sqrt();
            let params = HybridParams {
                f_c,
                kappa_1: kappa_tot / 3.0,
                kappa_2: kappa_tot / 3.0,
                kappa_int: kappa_tot / 3.0,
                f_fmr: f_c,
                gamma_m: kappa_tot / 4.0,
                g_m: 0.0,
            };
            let amplitude = amplitude_from_peak(&params, f_c, first.height);
            Ok(SweepGuess {
                params,
                nuisance: fallback_nuisance(amplitude),
                quality: GuessQuality::SinglePeak,
            })
        }
    }
}

/// Gain that makes the seeded model reproduce the observed peak height.
fn amplitude_from_peak(params: &HybridParams, f_peak: f64, observed: f64) -> f64 {
    match crate::model::transmission(f_peak, params) {
        Ok(model) if model.norm() > 0.0 => observed / model.norm(),
        _ => 1.0,
    }
}
