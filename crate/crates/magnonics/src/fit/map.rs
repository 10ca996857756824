//! Per-column map fitting with a field-calibration regression on top.
//!
//! Mirrors how avoided-crossing maps are analysed in practice: every current
//! column is fitted independently (warm-started through the two-peak sum
//! rule f₁+f₂ = f_c+f_fmr), then the fitted Kittel frequencies go through a
//! weighted linear regression against current to give the field-to-current
//! slope and the degeneracy current, while the shared cavity parameters are
//! combined as precision-weighted means.

use rayon::prelude::*;

use crate::data::MapData;
use crate::model::{FieldCalib, PhysicalConstants};

use super::guess::{initial_guess, GuessQuality};
use super::sweep::{fit_sweep, SweepFit, SweepFitConfig, SweepInit};
use super::FitError;

/// Options of [`fit_map`].
#[derive(Debug, Clone, Copy, Default)]
pub struct MapFitConfig {
    pub sweep: SweepFitConfig,
}

/// One converged column.
#[derive(Debug, Clone)]
pub struct ColumnFit {
    pub current_ma: f64,
    pub fit: SweepFit,
}

/// Precision-weighted global parameter estimates over the columns.
#[derive(Debug, Clone, Copy, Default)]
pub struct GlobalEstimates {
    pub f_c: f64,
    pub f_c_err: f64,
    pub kappa_total: f64,
    pub kappa_total_err: f64,
    pub gamma_m: f64,
    pub gamma_m_err: f64,
    pub g_m: f64,
    pub g_m_err: f64,
}

/// Result of a full map fit.
#[derive(Debug)]
pub struct MapFit {
    pub columns: Vec<ColumnFit>,
    /// Currents of columns that failed to converge (excluded from the
    /// regression and the global means).
    pub failed_currents: Vec<f64>,
    pub slope_hz_per_ma: f64,
    pub slope_err_hz_per_ma: f64,
    pub slope_mt_per_ma: f64,
    pub intercept_hz: f64,
    pub degeneracy_current_ma: f64,
    pub calib: FieldCalib,
    pub global: GlobalEstimates,
}

/// Weighted mean with an error floor so exact (noiseless) fits do not
/// produce infinite weights.
fn weighted_mean(values: &[(f64, f64)]) -> (f64, f64) {
    let mut sw = 0.0;
    let mut swx = 0.0;
    for &(x, err) in values {
        let floor = x.abs() * 1e-12 + 1e-9;
        let w = 1.0 / (err * err + floor * floor);
        sw += w;
        swx += w * x;
    }
    (swx / sw, (1.0 / sw).sqrt())
}

fn weighted_line(points: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    // points: (x, y, sigma_y); returns (slope, intercept, slope_err)
    let mut sw = 0.0;
    let mut swx = 0.0;
    let mut swy = 0.0;
    for &(x, y, err) in points {
        let floor = y.abs() * 1e-12 + 1e-9;
        let w = 1.0 / (err * err + floor * floor);
        sw += w;
        swx += w * x;
        swy += w * y;
    }
    let xbar = swx / sw;
    let ybar = swy / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut chi2 = 0.0;
    let mut weights = Vec::with_capacity(points.len());
    for &(x, y, err) in points {
        let floor = y.abs() * 1e-12 + 1e-9;
        let w = 1.0 / (err * err + floor * floor);
        weights.push(w);
        sxx += w * (x - xbar) * (x - xbar);
        sxy += w * (x - xbar) * (y - ybar);
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    for (&(x, y, _), &w) in points.iter().zip(&weights) {
        let r = y - (intercept + slope * x);
        chi2 += w * r * r;
    }
    let dof = (points.len().saturating_sub(2)).max(1) as f64;
    let slope_err = (chi2 / dof / sxx).sqrt();
    (slope, intercept, slope_err)
}

/// Fit every column of a map and extract the field calibration.
pub fn fit_map(map: &MapData, cfg: &MapFitConfig) -> Result<MapFit, FitError> {
    if map.currents().len() < 3 {
        return Err(FitError::InvalidInput(format!(
            "map fit needs at least 3 current columns, got {}",
            map.currents().len()
        )));
    }
    let n_cols = map.currents().len();

    // Stage 1: data-driven guess per column.
    let guesses: Vec<_> = (0..n_cols).map(|i| initial_guess(&map.column(i))).collect();

    // Stage 2: anchor the shared parameters on the most nearly degenerate
    // column (smallest two-peak separation), which identifies everything.
    let mut anchor_order: Vec<usize> = (0..n_cols)
        .filter(|&i| matches!(&guesses[i], Ok(g) if g.quality == GuessQuality::TwoPeaks))
        .collect();
    if anchor_order.is_empty() {
        return Err(FitError::MapFit(
            "no column shows a resolvable two-mode spectrum".into(),
        ));
    }
    anchor_order.sort_by(|&a, &b| {
        let ga = guesses[a].as_ref().unwrap().params.g_m;
        let gb = guesses[b].as_ref().unwrap().params.g_m;
        ga.total_cmp(&gb)
    });
    let mut anchor: Option<(usize, SweepFit)> = None;
    for &i in anchor_order.iter().take(5) {
        let fit = fit_sweep(&map.column(i), None, &cfg.sweep)?;
        if fit.converged {
            anchor = Some((i, fit));
            break;
        }
    }
    let (_, anchor_fit) =
        anchor.ok_or_else(|| FitError::MapFit("no anchor column converged".into()))?;
    let shared = anchor_fit.params;

    // Stage 3: per-column Kittel seed. Two-peak columns use the sum rule
    // f_fmr = f1 + f2 - f_c; the rest use a provisional line through those.
    let mut sum_rule: Vec<Option<f64>> = vec![None; n_cols];
    for (i, guess) in guesses.iter().enumerate() {
        if let Ok(g) = guess {
            if g.quality == GuessQuality::TwoPeaks {
                // guess.f_c is the midpoint of the two peaks, so their sum
                // is 2*f_c_guess.
                sum_rule[i] = Some(2.0 * g.params.f_c - shared.f_c);
            }
        }
    }
    let line_points: Vec<(f64, f64, f64)> = map
        .currents()
        .iter()
        .zip(&sum_rule)
        .filter_map(|(&i, est)| est.map(|f| (i, f, 1.0)))
        .collect();
    let provisional = if line_points.len() >= 2 {
        let (slope, intercept, _) = weighted_line(&line_points);
        Some((slope, intercept))
    } else {
        None
    };

    // Stage 4: independent column fits (parallel; results are ordered).
    let results: Vec<Result<SweepFit, FitError>> = (0..n_cols)
        .into_par_iter()
        .map(|i| {
            let current = map.currents()[i];
            let f_fmr = sum_rule[i]
                .or_else(|| provisional.map(|(m, b)| b + m * current))
                .unwrap_or(shared.f_c);
            let mut params = shared;
            params.f_fmr = f_fmr.max(1.0);
            let nuisance = match &guesses[i] {
                Ok(g) => g.nuisance,
                Err(_) => anchor_fit.nuisance,
            };
            fit_sweep(&map.column(i), Some(&SweepInit { params, nuisance }), &cfg.sweep)
        })
        .collect();

    let mut columns = Vec::new();
    let mut failed = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        let current = map.currents()[i];
        match res {
            Ok(fit) if fit.converged => columns.push(ColumnFit { current_ma: current, fit }),
            _ => failed.push(current),
        }
    }
    if columns.len() * 2 < n_cols {
        return Err(FitError::MapFit(format!(
            "{} of {} columns failed to converge",
            failed.len(),
            n_cols
        )));
    }

    // Stage 5: calibration regression and global means.
    let reg_points: Vec<(f64, f64, f64)> = columns
        .iter()
        .map(|c| (c.current_ma, c.fit.params.f_fmr, c.fit.errors.f_fmr))
        .collect();
    let (slope, intercept, slope_err) = weighted_line(&reg_points);

    let collect = |value: fn(&SweepFit) -> (f64, f64)| -> (f64, f64) {
        let pairs: Vec<(f64, f64)> = columns.iter().map(|c| value(&c.fit)).collect();
        weighted_mean(&pairs)
    };
    let (f_c, f_c_err) = collect(|f| (f.params.f_c, f.errors.f_c));
    let (kappa_total, kappa_total_err) =
        collect(|f| (f.params.kappa_total(), f.errors.kappa_1 + f.errors.kappa_2 + f.errors.kappa_int));
    let (gamma_m, gamma_m_err) = collect(|f| (f.params.gamma_m, f.errors.gamma_m));
    let (g_m, g_m_err) = collect(|f| (f.params.g_m, f.errors.g_m));

    let consts = PhysicalConstants::default();
    let slope_mt_per_ma = slope / consts.gamma_e_hz_per_mt();
    let degeneracy_current_ma = (f_c - intercept) / slope;
    let calib = FieldCalib::from_degeneracy(slope_mt_per_ma, degeneracy_current_ma, f_c, &consts);

    Ok(MapFit {
        columns,
        failed_currents: failed,
        slope_hz_per_ma: slope,
        slope_err_hz_per_ma: slope_err,
        slope_mt_per_ma,
        intercept_hz: intercept,
        degeneracy_current_ma,
        calib,
        global: GlobalEstimates {
            f_c,
            f_c_err,
            kappa_total,
            kappa_total_err,
            gamma_m,
            gamma_m_err,
            g_m,
            g_m_err,
        },
    })
}
