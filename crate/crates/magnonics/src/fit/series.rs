//! One-dimensional series fits: the coupling-scaling slope and the
//! two-parameter linewidth temperature model.

use crate::data::ResidualRow;
use crate::model::{spin_count, PhysicalConstants, SphereSpec, TempModel};

use super::lm::{lm_minimize, StopReason};
use super::{FitError, FitOptions};

/// Through-origin fit of g against √N(d).
#[derive(Debug, Clone, Copy)]
pub struct ScalingFit {
    /// Single-spin coupling slope (Hz).
    pub g0_hz: f64,
    pub g0_err_hz: f64,
    pub residual_norm: f64,
    pub points_used: usize,
}

/// Weighted least squares of coupling versus √N through the origin: the
/// slope is the single-spin coupling strength.
///
/// `weights`, when given, are per-point inverse-variance weights.
pub fn fit_scaling(
    points: &[(f64, f64)],
    weights: Option<&[f64]>,
) -> Result<ScalingFit, FitError> {
    if points.is_empty() {
        return Err(FitError::InvalidInput("scaling fit needs at least one point".into()));
    }
    if let Some(w) = weights {
        if w.len() != points.len() {
            return Err(FitError::InvalidInput("weights length must match points".into()));
        }
        if w.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(FitError::InvalidInput("weights must be finite and >= 0".into()));
        }
    }
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let xs: Vec<f64> = points
        .iter()
        .map(|&(d, _)| spin_count(&SphereSpec::yig(d)).sqrt())
        .collect();
    for (i, (&(_, g), &x)) in points.iter().zip(&xs).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        sxx += w * x * x;
        sxy += w * x * g;
    }
    if sxx == 0.0 {
        return Err(FitError::InvalidInput(
            "all abscissae are zero: no spins, no slope".into(),
        ));
    }
    let g0 = sxy / sxx;
    let mut chi2 = 0.0;
    let mut ssr = 0.0;
    for (i, (&(_, g), &x)) in points.iter().zip(&xs).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let r = g - g0 * x;
        chi2 += w * r * r;
        ssr += r * r;
    }
    let g0_err = if points.len() > 1 {
        (chi2 / (points.len() - 1) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(ScalingFit { g0_hz: g0, g0_err_hz: g0_err, residual_norm: ssr.sqrt(), points_used: points.len() })
}

/// Options of [`fit_temperature`].
#[derive(Debug, Clone, Copy)]
pub struct TempFitOptions {
    /// Points above this temperature are excluded from the fit and reported
    /// as residuals against the fitted model.
    pub cutoff_k: f64,
    pub lm: FitOptions,
}

impl Default for TempFitOptions {
    fn default() -> Self {
        Self { cutoff_k: 1.0, lm: FitOptions::default() }
    }
}

/// Result of the temperature-model fit.
#[derive(Debug, Clone)]
pub struct TempFit {
    pub model: TempModel,
    pub gamma_tls0_err: f64,
    pub gamma_mm_err: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub points_used: usize,
    /// Above-cutoff points with their deviation from the fitted model.
    pub excluded: Vec<ResidualRow>,
}

/// Fit γ(T) = γ_TLS(0)·tanh(hf/2k_BT) + γ_mm to (T, γ) points.
///
/// The model is linear in the two parameters, so a closed-form least-squares
/// solution seeds a short log-space polish that enforces positivity.
pub fn fit_temperature(
    points: &[(f64, f64)],
    f_fmr: f64,
    opts: &TempFitOptions,
) -> Result<TempFit, FitError> {
    if !(f_fmr.is_finite() && f_fmr > 0.0) {
        return Err(FitError::InvalidInput("f_fmr must be finite and > 0".into()));
    }
    let consts = PhysicalConstants::default();
    let tanh_at = |t: f64| -> f64 {
        if t == 0.0 {
            1.0
        } else {
            (consts.planck_h * f_fmr / (2.0 * consts.boltzmann_kb * t)).tanh()
        }
    };

    let mut included: Vec<(f64, f64)> = Vec::new();
    let mut excluded_pts: Vec<(f64, f64)> = Vec::new();
    for &(t, g) in points {
        if !(t.is_finite() && t >= 0.0 && g.is_finite()) {
            return Err(FitError::InvalidInput(format!("invalid point (T={t}, gamma={g})")));
        }
        if t <= opts.cutoff_k {
            included.push((t, g));
        } else {
            excluded_pts.push((t, g));
        }
    }
    if included.len() < 2 {
        return Err(FitError::InvalidInput(format!(
            "temperature fit needs at least 2 points at or below {} K, got {}",
            opts.cutoff_k,
            included.len()
        )));
    }

    // Linear normal equations for (gamma_tls0, gamma_mm).
    let n = included.len() as f64;
    let mut sx = 0.0;
    let mut sxx = 0.0;
    let mut sy = 0.0;
    let mut sxy = 0.0;
    for &(t, g) in &included {
        let x = tanh_at(t);
        sx += x;
        sxx += x * x;
        sy += g;
        sxy += x * g;
    }
    let det = sxx * n - sx * sx;
    if det.abs() <= 1e-12 * sxx.max(1.0) * n {
        return Err(FitError::InvalidInput(
            "degenerate design: the tanh factor is the same for every included point".into(),
        ));
    }
    let tls0_seed = (sxy * n - sx * sy) / det;
    let mm_seed = (sxx * sy - sx * sxy) / det;

    // Log-space polish keeps both rates non-negative for any input data.
    let scale = included.iter().map(|&(_, g)| g.abs()).fold(0.0f64, f64::max).max(1.0);
    let floor = scale * 1e-9;
    let theta0 = [tls0_seed.max(floor).ln(), mm_seed.max(floor).ln()];
    let xs: Vec<f64> = included.iter().map(|&(t, _)| tanh_at(t)).collect();
    let ys: Vec<f64> = included.iter().map(|&(_, g)| g).collect();
    let residual = move |theta: &[f64]| -> Vec<f64> {
        let tls0 = theta[0].exp();
        let mm = theta[1].exp();
        xs.iter().zip(&ys).map(|(&x, &y)| tls0 * x + mm - y).collect()
    };
    let lm = lm_minimize(residual, &theta0, &opts.lm)?;

    let gamma_tls0 = lm.params[0].exp();
    let gamma_mm = lm.params[1].exp();
    let model = TempModel { gamma_tls0, gamma_mm, f_fmr };
    let excluded = excluded_pts
        .into_iter()
        .map(|(t, g)| {
            let predicted = gamma_tls0 * tanh_at(t) + gamma_mm;
            ResidualRow { x: t, observed: g, model: predicted, residual: g - predicted }
        })
        .collect();

    Ok(TempFit {
        model,
        gamma_tls0_err: gamma_tls0 * lm.standard_errors[0],
        gamma_mm_err: gamma_mm * lm.standard_errors[1],
        residual_norm: lm.residual_norm,
        iterations: lm.iterations,
        converged: lm.converged,
        stop_reason: lm.stop_reason,
        points_used: included.len(),
        excluded,
    })
}
