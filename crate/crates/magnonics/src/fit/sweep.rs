//! Full-model fit of a complex transmission sweep.
//!
//! The residuals are the stacked real and imaginary parts of
//! `nuisance ∘ model − data` (magnitude-only fitting is an option flag).
//! Rates and the coupling are fitted through their logarithms so returned
//! values are positive by construction.
//!
//! The engine coordinates are chosen so that every direction the data
//! constrain weakly is a coordinate of its own:
//!
//! * the loss budget is (κ_tot + γ_m, ln γ_m/κ_tot) — the sum sets the mode
//!   widths while the exchange is resolved only by the shallow on-resonance
//!   notch;
//! * the numerator is one effective amplitude A·√(κ₁κ₂), keeping the loss
//!   coordinates out of the peak heights;
//! * the phase is referenced to the band center so it stays decoupled from
//!   the electrical delay;
//! * frequencies are scaled to GHz and the delay to ns.
//!
//! A transmission trace determines the couplings only through κ_tot and
//! √(κ₁κ₂)·amplitude, so the split between κ₁, κ₂ and κ_int is carried over
//! from the initial point (in practice the ports come from a separate
//! reflection measurement) and only the total is fitted.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::data::Sweep;
use crate::model::HybridParams;

use super::guess::{initial_guess, GuessQuality};
use super::lm::{lm_minimize, StopReason};
use super::{CalibrationNuisance, FitError, FitOptions};

const F_SCALE: f64 = 1e9; // engine frequencies in GHz
const TAU_SCALE: f64 = 1e-9; // engine delay in ns

/// Starting point for [`fit_sweep`]; the port split of `params` is kept.
#[derive(Debug, Clone, Copy)]
pub struct SweepInit {
    pub params: HybridParams,
    pub nuisance: CalibrationNuisance,
}

/// Options of the sweep fitter.
#[derive(Debug, Clone, Copy)]
pub struct SweepFitConfig {
    pub lm: FitOptions,
    /// Fit |S21| instead of the complex signal; phase, delay and the
    /// imaginary background stay at their initial values.
    pub magnitude_only: bool,
    /// Fit the instrument nuisance alongside the physical parameters; when
    /// false the nuisance stays at its initial values.
    pub float_nuisance: bool,
}

impl Default for SweepFitConfig {
    fn default() -> Self {
        Self { lm: FitOptions::default(), magnitude_only: false, float_nuisance: true }
    }
}

/// One-sigma standard errors in physical units. The port-coupling errors are
/// the κ_tot error apportioned by the fixed split.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParamErrors {
    pub f_c: f64,
    pub kappa_1: f64,
    pub kappa_2: f64,
    pub kappa_int: f64,
    pub f_fmr: f64,
    pub gamma_m: f64,
    pub g_m: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub electrical_delay: f64,
    pub background_re: f64,
    pub background_im: f64,
}

/// Result of a sweep fit.
#[derive(Debug, Clone)]
pub struct SweepFit {
    pub params: HybridParams,
    pub nuisance: CalibrationNuisance,
    pub errors: ParamErrors,
    /// ‖r‖ over the stacked residuals at the solution.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Covariance of the free parameters in physical units; rows/columns
    /// follow `free_names`.
    pub covariance: DMatrix<f64>,
    pub free_names: Vec<&'static str>,
    pub options: FitOptions,
    /// Set when the starting point came from the data.
    pub guess_quality: Option<GuessQuality>,
}

/// Split engine coordinates (ln(κ_tot+γ), ln(γ/κ_tot)) into the two loss
/// rates; stable for any exchange value.
fn loss_split(ln_loss: f64, exchange: f64) -> (f64, f64) {
    let loss = ln_loss.exp();
    if exchange >= 0.0 {
        let e = (-exchange).exp();
        let kappa = loss * e / (1.0 + e);
        (kappa, loss - kappa)
    } else {
        let e = exchange.exp();
        let gamma = loss * e / (1.0 + e);
        (loss - gamma, gamma)
    }
}

#[derive(Clone, Copy)]
struct Layout {
    magnitude_only: bool,
    float_nuisance: bool,
    /// Band center; the engine's phase parameter is the phase *at* this
    /// frequency so the phase and delay directions stay near-orthogonal.
    f_ref: f64,
    /// Fixed port split (κ₁, κ₂, κ_int)/κ_tot.
    split: (f64, f64, f64),
}

impl Layout {
    fn n_params(&self) -> usize {
        5 + if !self.float_nuisance {
            0
        } else if self.magnitude_only {
            2
        } else {
            5
        }
    }

    fn names(&self) -> Vec<&'static str> {
        let mut names = vec!["f_c", "kappa_total", "f_fmr", "gamma_m", "g_m"];
        if self.float_nuisance {
            if self.magnitude_only {
                names.extend(["amplitude", "background_re"]);
            } else {
                names.extend([
                    "amplitude",
                    "phase",
                    "electrical_delay",
                    "background_re",
                    "background_im",
                ]);
            }
        }
        names
    }

    fn split_product_sqrt(&self) -> f64 {
        (self.split.0 * self.split.1).sqrt()
    }

    fn pack(&self, p: &HybridParams, nu: &CalibrationNuisance, floors: &Floors) -> Vec<f64> {
        let kappa = p.kappa_total().max(floors.kappa);
        let gamma = p.gamma_m.max(floors.gamma);
        let mut theta = vec![
            p.f_c / F_SCALE,
            (kappa + gamma).ln(),
            p.f_fmr / F_SCALE,
            (gamma / kappa).ln().clamp(-20.0, 20.0),
            p.g_m.max(floors.g).ln(),
        ];
        if self.float_nuisance {
            let numerator = (nu.amplitude * kappa * self.split_product_sqrt()).max(f64::MIN_POSITIVE);
            theta.push(numerator.ln());
            if !self.magnitude_only {
                let centered_phase =
                    nu.phase - std::f64::consts::TAU * self.f_ref * nu.electrical_delay;
                theta.push(centered_phase);
                theta.push(nu.electrical_delay / TAU_SCALE);
            }
            theta.push(nu.background_re);
            if !self.magnitude_only {
                theta.push(nu.background_im);
            }
        }
        theta
    }

    fn unpack(&self, theta: &[f64], fixed: &CalibrationNuisance) -> (HybridParams, CalibrationNuisance) {
        let (kappa_total, gamma_m) = loss_split(theta[1], theta[3]);
        let params = HybridParams {
            f_c: theta[0] * F_SCALE,
            kappa_1: self.split.0 * kappa_total,
            kappa_2: self.split.1 * kappa_total,
            kappa_int: self.split.2 * kappa_total,
            f_fmr: theta[2] * F_SCALE,
            gamma_m,
            g_m: theta[4].exp(),
        };
        let mut nu = *fixed;
        if self.float_nuisance {
            let denom = (kappa_total * self.split_product_sqrt()).max(f64::MIN_POSITIVE);
            nu.amplitude = theta[5].exp() / denom;
            if self.magnitude_only {
                nu.background_re = theta[6];
            } else {
                nu.electrical_delay = theta[7] * TAU_SCALE;
                nu.phase = theta[6] + std::f64::consts::TAU * self.f_ref * nu.electrical_delay;
                nu.background_re = theta[8];
                nu.background_im = theta[9];
            }
        }
        (params, nu)
    }

    /// Model value at the engine point.
    fn eval(&self, f: f64, theta: &[f64], fixed: &CalibrationNuisance) -> Complex64 {
        let (kappa_total, gamma_m) = loss_split(theta[1], theta[3]);
        let g = theta[4].exp();
        let mag_den = Complex64::new(-0.5 * gamma_m, f - theta[2] * F_SCALE);
        let den = Complex64::new(-0.5 * kappa_total, f - theta[0] * F_SCALE)
            + Complex64::new(g * g, 0.0) / mag_den;
        if self.float_nuisance {
            let numerator = theta[5].exp();
            let bare = Complex64::new(numerator, 0.0) / den;
            if self.magnitude_only {
                let phase = fixed.phase - std::f64::consts::TAU * f * fixed.electrical_delay;
                Complex64::from_polar(1.0, phase) * bare
                    + Complex64::new(theta[6], fixed.background_im)
            } else {
                let phase =
                    theta[6] - std::f64::consts::TAU * (f - self.f_ref) * theta[7] * TAU_SCALE;
                Complex64::from_polar(1.0, phase) * bare + Complex64::new(theta[8], theta[9])
            }
        } else {
            let numerator = fixed.amplitude * kappa_total * self.split_product_sqrt();
            fixed.apply_gain_only(f, Complex64::new(numerator, 0.0) / den)
        }
    }

    /// d(physical)/d(engine) for the covariance transform; rows follow
    /// `names()`.
    fn jacobian_to_physical(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = self.n_params();
        let (kappa_total, gamma_m) = loss_split(theta[1], theta[3]);
        let loss = kappa_total + gamma_m;
        let exchange_mix = kappa_total * gamma_m / loss;
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = F_SCALE;
        m[(1, 1)] = kappa_total;
        m[(1, 3)] = -exchange_mix;
        m[(2, 2)] = F_SCALE;
        m[(3, 1)] = gamma_m;
        m[(3, 3)] = exchange_mix;
        m[(4, 4)] = theta[4].exp();
        if self.float_nuisance {
            let denom = (kappa_total * self.split_product_sqrt()).max(f64::MIN_POSITIVE);
            let amplitude = theta[5].exp() / denom;
            m[(5, 5)] = amplitude;
            m[(5, 1)] = -amplitude;
            m[(5, 3)] = amplitude * gamma_m / loss;
            if self.magnitude_only {
                m[(6, 6)] = 1.0;
            } else {
                m[(6, 6)] = 1.0;
                // phase_physical = theta[6] + 2*pi*f_ref*delay
                m[(6, 7)] = std::f64::consts::TAU * self.f_ref * TAU_SCALE;
                m[(7, 7)] = TAU_SCALE;
                m[(8, 8)] = 1.0;
                m[(9, 9)] = 1.0;
            }
        }
        m
    }
}

struct Floors {
    kappa: f64,
    gamma: f64,
    g: f64,
}

impl CalibrationNuisance {
    /// Gain and phase only: the additive background is handled separately by
    /// the engine layout.
    fn apply_gain_only(&self, f: f64, s: Complex64) -> Complex64 {
        let phase = self.phase - std::f64::consts::TAU * f * self.electrical_delay;
        self.amplitude * Complex64::from_polar(1.0, phase) * s + self.background()
    }
}

/// Plain physical model with nuisance, used by the pre-solve.
fn model_value(f: f64, p: &HybridParams, nu: &CalibrationNuisance) -> Complex64 {
    let num = (p.kappa_1 * p.kappa_2).sqrt();
    let mag_den = Complex64::new(-0.5 * p.gamma_m, f - p.f_fmr);
    let den = Complex64::new(-0.5 * p.kappa_total(), f - p.f_c)
        + Complex64::new(p.g_m * p.g_m, 0.0) / mag_den;
    nu.apply(f, Complex64::new(num, 0.0) / den)
}

/// Conditional linear solve for the instrument nuisance: with the physical
/// parameters held at the starting point, the complex gain G = A·e^{iφ} and
/// the background are linear in `data ≈ G·e^{−2πifτ}·T(f) + b`, and the
/// delay is scanned over phase tilts of up to ±2π across the band. This
/// starts the nonlinear refinement in the right phase branch; without it the
/// delay/phase pair has 2π-periodic local minima.
fn presolve_nuisance(
    freqs: &[f64],
    data: &[Complex64],
    params: &HybridParams,
    init: &CalibrationNuisance,
    span: f64,
) -> CalibrationNuisance {
    let bare = CalibrationNuisance::default();
    let model: Vec<Complex64> = freqs.iter().map(|&f| model_value(f, params, &bare)).collect();
    let m = freqs.len() as f64;
    let dtau = 0.5 / (std::f64::consts::TAU * span);
    let mut best: Option<(f64, CalibrationNuisance)> = None;
    for k in -12i32..=12 {
        let tau = init.electrical_delay + f64::from(k) * dtau;
        let mut s_hh = 0.0;
        let mut s_h = Complex64::new(0.0, 0.0);
        let mut s_hy = Complex64::new(0.0, 0.0);
        let mut s_y = Complex64::new(0.0, 0.0);
        let mut h_of = Vec::with_capacity(freqs.len());
        for ((&f, &t), &y) in freqs.iter().zip(&model).zip(data) {
            let h = Complex64::from_polar(1.0, -std::f64::consts::TAU * f * tau) * t;
            s_hh += h.norm_sqr();
            s_h += h;
            s_hy += h.conj() * y;
            s_y += y;
            h_of.push(h);
        }
        let denom = s_hh - s_h.norm_sqr() / m;
        if !(denom > 0.0) {
            continue;
        }
        let gain = (s_hy - s_h.conj() * s_y / m) / denom;
        let background = (s_y - gain * s_h) / m;
        if !(gain.norm() > 1e-12) {
            continue;
        }
        let cost: f64 = h_of
            .iter()
            .zip(data)
            .map(|(&h, &y)| (gain * h + background - y).norm_sqr())
            .sum();
        let candidate = CalibrationNuisance {
            amplitude: gain.norm(),
            phase: gain.arg(),
            electrical_delay: tau,
            background_re: background.re,
            background_im: background.im,
        };
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, candidate));
        }
    }
    best.map(|(_, nu)| nu).unwrap_or(*init)
}

/// Conditional linear solve for (complex gain, complex background) given
/// the filter responses h_i: the exact minimizer of Σ|G·h + b − y|².
fn solve_gain_background(h: &[Complex64], data: &[Complex64]) -> Option<(Complex64, Complex64)> {
    let m = h.len() as f64;
    let mut s_hh = 0.0;
    let mut s_h = Complex64::new(0.0, 0.0);
    let mut s_hy = Complex64::new(0.0, 0.0);
    let mut s_y = Complex64::new(0.0, 0.0);
    for (&h, &y) in h.iter().zip(data) {
        s_hh += h.norm_sqr();
        s_h += h;
        s_hy += h.conj() * y;
        s_y += y;
    }
    let denom = s_hh - s_h.norm_sqr() / m;
    if !(denom > 0.0) {
        return None;
    }
    let gain = (s_hy - s_h.conj() * s_y / m) / denom;
    let background = (s_y - gain * s_h) / m;
    Some((gain, background))
}

/// Fit the hybrid model (and instrument nuisance) to a sweep.
///
/// Without an explicit `init` the starting point comes from
/// [`initial_guess`], which also fixes the (uninformative) port split.
pub fn fit_sweep(
    sweep: &Sweep,
    init: Option<&SweepInit>,
    cfg: &SweepFitConfig,
) -> Result<SweepFit, FitError> {
    cfg.lm.validate()?;
    let (start, guess_quality) = match init {
        Some(init) => (*init, None),
        None => {
            let guess = initial_guess(sweep)?;
            (SweepInit { params: guess.params, nuisance: guess.nuisance }, Some(guess.quality))
        }
    };
    start.params.validate()?;
    start.nuisance.validate()?;

    // Port split carried through the fit.
    let kt0 = start.params.kappa_total();
    let split = if kt0 > 0.0 {
        (
            start.params.kappa_1 / kt0,
            start.params.kappa_2 / kt0,
            start.params.kappa_int / kt0,
        )
    } else {
        (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    };
    if split.0 * split.1 == 0.0 {
        return Err(FitError::InvalidInput(
            "initial port couplings must both be positive (transmission needs two ports)".into(),
        ));
    }

    let f_ref = 0.5 * (sweep.freqs()[0] + sweep.freqs()[sweep.len() - 1]);
    let layout = Layout {
        magnitude_only: cfg.magnitude_only,
        float_nuisance: cfg.float_nuisance,
        f_ref,
        split,
    };
    let n = layout.n_params();
    let m = if cfg.magnitude_only { sweep.len() } else { 2 * sweep.len() };
    if m < n {
        return Err(FitError::InvalidInput(format!(
            "sweep provides {m} residuals for {n} parameters"
        )));
    }

    let span = sweep.span();
    let floors = Floors { kappa: span * 1e-3, gamma: span * 1e-4, g: span * 1e-4 };
    let start_nuisance = if cfg.float_nuisance && !cfg.magnitude_only {
        presolve_nuisance(sweep.freqs(), sweep.s21(), &start.params, &start.nuisance, span)
    } else {
        start.nuisance
    };
    let theta0 = layout.pack(&start.params, &start_nuisance, &floors);

    let freqs = sweep.freqs().to_vec();
    let data = sweep.s21().to_vec();
    let fixed_nuisance = start_nuisance;
    let magnitude_only = cfg.magnitude_only;

    // Residual over the full engine vector, used directly in the fixed- and
    // magnitude-mode fits and for the final covariance in every mode.
    let full_residual = {
        let freqs = freqs.clone();
        let data = data.clone();
        move |theta: &[f64]| -> Vec<f64> {
            let mut r =
                Vec::with_capacity(if magnitude_only { freqs.len() } else { 2 * freqs.len() });
            for (f, y) in freqs.iter().zip(&data) {
                let s = layout.eval(*f, theta, &fixed_nuisance);
                if magnitude_only {
                    r.push(s.norm() - y.norm());
                } else {
                    r.push(s.re - y.re);
                    r.push(s.im - y.im);
                }
            }
            r
        }
    };

    let varpro = !cfg.magnitude_only;
    let (theta_star, iterations, lm_diag) = if varpro {
        // Variable projection: the complex gain and background are the
        // exact conditional minimizers at every evaluation, so none of the
        // four linear directions exists in the nonlinear landscape. The
        // nonlinear vector is [f_c, ln loss, f_fmr, exchange, ln g, tau].
        let tau0 = if cfg.float_nuisance {
            theta0[7]
        } else {
            start_nuisance.electrical_delay / TAU_SCALE
        };
        let nl0 = vec![theta0[0], theta0[1], theta0[2], theta0[3], theta0[4], tau0];
        let vp_residual = {
            let freqs = freqs.clone();
            let data = data.clone();
            move |nl: &[f64]| -> Vec<f64> {
                let (kappa_total, gamma_m) = loss_split(nl[1], nl[3]);
                let g = nl[4].exp();
                let tau = nl[5] * TAU_SCALE;
                let h: Vec<Complex64> = freqs
                    .iter()
                    .map(|&f| {
                        let mag_den = Complex64::new(-0.5 * gamma_m, f - nl[2] * F_SCALE);
                        let den = Complex64::new(-0.5 * kappa_total, f - nl[0] * F_SCALE)
                            + Complex64::new(g * g, 0.0) / mag_den;
                        let phase = -std::f64::consts::TAU * (f - layout.f_ref) * tau;
                        Complex64::from_polar(1.0, phase) / den
                    })
                    .collect();
                let (gain, background) = match solve_gain_background(&h, &data) {
                    Some(gb) => gb,
                    None => (Complex64::new(f64::NAN, 0.0), Complex64::new(0.0, 0.0)),
                };
                let mut r = Vec::with_capacity(2 * freqs.len());
                for (&h, &y) in h.iter().zip(&data) {
                    let s = gain * h + background - y;
                    r.push(s.re);
                    r.push(s.im);
                }
                r
            }
        };

        // Damped least squares handles every direction except the κ/γ
        // exchange, whose curvature lives only in the shallow on-resonance
        // notch, orders of magnitude below the rest; a shared damping
        // parameter either freezes it or lets it collapse. It is instead
        // minimized through its profile cost: for each probed exchange
        // value the remaining five parameters are refitted (they are
        // well-conditioned and converge in a few iterations warm-started),
        // and the scalar profile is bracket-scanned and golden-sectioned.
        let mut iterations = 0usize;
        let mut warm: Vec<f64> = vec![nl0[0], nl0[1], nl0[2], nl0[4], nl0[5]];
        let mut profile = |x: f64, warm: &mut Vec<f64>, budget: usize| -> Result<f64, FitError> {
            let expand =
                |red: &[f64], pin: f64| vec![red[0], red[1], red[2], pin, red[3], red[4]];
            let mut opts = cfg.lm;
            opts.max_iterations = budget;
            opts.cost_tolerance = cfg.lm.cost_tolerance.max(1e-12);
            let stage =
                lm_minimize(|red: &[f64]| vp_residual(&expand(red, x)), warm, &opts)?;
            iterations += stage.iterations;
            *warm = stage.params.clone();
            Ok(0.5 * stage.residual_norm * stage.residual_norm)
        };

        let x0 = nl0[3];
        let mut best_x = x0;
        let mut best_cost = profile(x0, &mut warm, cfg.lm.max_iterations.min(60))?;
        let mut best_warm = warm.clone();
        // Coarse bracket scan over the physically plausible exchange range.
        let scan_step = 0.5;
        for k in [-3i32, -2, -1, 1, 2, 3] {
            let x = x0 + scan_step * f64::from(k);
            let mut w = best_warm.clone();
            let c = profile(x, &mut w, 25)?;
            if c < best_cost {
                best_cost = c;
                best_x = x;
                best_warm = w;
            }
        }
        // Golden section inside the bracketing neighbours.
        let (mut lo, mut hi) = (best_x - scan_step, best_x + scan_step);
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut w1 = best_warm.clone();
        let mut w2 = best_warm.clone();
        let mut f1 = profile(x1, &mut w1, 25)?;
        let mut f2 = profile(x2, &mut w2, 25)?;
        for _ in 0..40 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                w2 = w1.clone();
                x1 = hi - INV_PHI * (hi - lo);
                f1 = profile(x1, &mut w1, 25)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                w1 = w2.clone();
                x2 = lo + INV_PHI * (hi - lo);
                f2 = profile(x2, &mut w2, 25)?;
            }
            if (hi - lo).abs() < 1e-9 {
                break;
            }
        }
        let (mut x_star, warm_star) = if f1 <= f2 { (x1, w1) } else { (x2, w2) };
        let mut best_warm = warm_star;
        // One parabolic-vertex step sharpens the profile minimum beyond the
        // comparison jitter the golden section bottoms out at.
        let h = 1e-4;
        let mut wc = best_warm.clone();
        let mut wl = best_warm.clone();
        let mut wr = best_warm.clone();
        let pc = profile(x_star, &mut wc, 25)?;
        let pl = profile(x_star - h, &mut wl, 25)?;
        let pr = profile(x_star + h, &mut wr, 25)?;
        let curvature = pl - 2.0 * pc + pr;
        if curvature > 0.0 {
            let vertex = x_star - 0.5 * h * (pr - pl) / curvature;
            if (vertex - x_star).abs() < scan_step {
                let mut wv = wc.clone();
                let pv = profile(vertex, &mut wv, 25)?;
                if pv <= pc {
                    x_star = vertex;
                    best_warm = wv;
                } else {
                    best_warm = wc;
                }
            } else {
                best_warm = wc;
            }
        } else {
            best_warm = wc;
        }
        let nl_star = vec![
            best_warm[0],
            best_warm[1],
            best_warm[2],
            x_star,
            best_warm[3],
            best_warm[4],
        ];

        // Final polish supplies the official convergence diagnostics. With
        // a pinned nuisance the polish runs over the five physical
        // parameters only, which also re-tightens the κ/γ exchange against
        // the known gain.
        let (lm, theta_from) = if cfg.float_nuisance {
            (lm_minimize(&vp_residual, &nl_star, &cfg.lm)?, None)
        } else {
            let start5 = vec![nl_star[0], nl_star[1], nl_star[2], nl_star[3], nl_star[4]];
            let polish = lm_minimize(&full_residual, &start5, &cfg.lm)?;
            let theta = polish.params.clone();
            (polish, Some(theta))
        };
        let iterations = iterations + lm.iterations;

        if let Some(theta) = theta_from {
            // Calibrated mode: the engine vector is already the full one.
            (theta, iterations, lm)
        } else {
        // Reassemble the full engine vector with the conditional optimum of
        // the linear block.
        let nl = &lm.params;
        let (kappa_total, gamma_m) = loss_split(nl[1], nl[3]);
        let g = nl[4].exp();
        let tau = nl[5] * TAU_SCALE;
        let h: Vec<Complex64> = freqs
            .iter()
            .map(|&f| {
                let mag_den = Complex64::new(-0.5 * gamma_m, f - nl[2] * F_SCALE);
                let den = Complex64::new(-0.5 * kappa_total, f - nl[0] * F_SCALE)
                    + Complex64::new(g * g, 0.0) / mag_den;
                let phase = -std::f64::consts::TAU * (f - layout.f_ref) * tau;
                Complex64::from_polar(1.0, phase) / den
            })
            .collect();
        let (gain, background) = solve_gain_background(&h, &data)
            .ok_or_else(|| FitError::Numerical("degenerate model trace in gain solve".into()))?;
        if !(gain.norm() > 0.0 && gain.norm().is_finite()) {
            return Err(FitError::Numerical("gain solve produced a non-positive gain".into()));
        }
        let theta_star = vec![
            nl[0],
            nl[1],
            nl[2],
            nl[3],
            nl[4],
            gain.norm().ln(),
            gain.arg(),
            nl[5],
            background.re,
            background.im,
        ];
        (theta_star, iterations, lm)
        }
    } else {
        // Fixed-nuisance and magnitude-only fits: plain damped least squares
        // over the full vector, with the same stage-1 exchange hold.
        let exchange_idx = 3;
        let theta_init = theta0.clone();
        let expand = move |reduced: &[f64]| -> Vec<f64> {
            let mut full = Vec::with_capacity(reduced.len() + 1);
            full.extend_from_slice(&reduced[..exchange_idx]);
            full.push(theta_init[exchange_idx]);
            full.extend_from_slice(&reduced[exchange_idx..]);
            full
        };
        let reduced0: Vec<f64> = theta0
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (i != exchange_idx).then_some(v))
            .collect();
        let mut stage1_opts = cfg.lm;
        stage1_opts.max_iterations = cfg.lm.max_iterations.min(60);
        stage1_opts.cost_tolerance = cfg.lm.cost_tolerance.max(1e-8);
        let stage1 =
            lm_minimize(|red: &[f64]| full_residual(&expand(red)), &reduced0, &stage1_opts)?;
        let theta1 = expand(&stage1.params);
        let lm = lm_minimize(&full_residual, &theta1, &cfg.lm)?;
        let iterations = stage1.iterations + lm.iterations;
        (lm.params.clone(), iterations, lm)
    };

    // Covariance over the full parameter set at the solution, in physical
    // units: σ̂²(JᵀJ)⁻¹ through the coordinate jacobian.
    let jac = super::lm::jacobian_fd(&full_residual, &theta_star, cfg.lm.finite_difference_step)?;
    let r_final = nalgebra::DVector::from_vec(full_residual(&theta_star));
    let engine_cov = super::lm::covariance_of(&jac, &r_final, n);

    let (params, nuisance) = layout.unpack(&theta_star, &fixed_nuisance);
    let jac_phys = layout.jacobian_to_physical(&theta_star);
    let covariance = &jac_phys * &engine_cov * jac_phys.transpose();
    let lm = lm_diag;
    let err = |i: usize| covariance[(i, i)].max(0.0).sqrt();
    let kt_err = err(1);
    let mut errors = ParamErrors {
        f_c: err(0),
        kappa_1: split.0 * kt_err,
        kappa_2: split.1 * kt_err,
        kappa_int: split.2 * kt_err,
        f_fmr: err(2),
        gamma_m: err(3),
        g_m: err(4),
        ..Default::default()
    };
    if cfg.float_nuisance {
        errors.amplitude = err(5);
        if cfg.magnitude_only {
            errors.background_re = err(6);
        } else {
            errors.phase = err(6);
            errors.electrical_delay = err(7);
            errors.background_re = err(8);
            errors.background_im = err(9);
        }
    }

    Ok(SweepFit {
        params,
        nuisance,
        errors,
        residual_norm: lm.residual_norm,
        iterations,
        converged: lm.converged,
        stop_reason: lm.stop_reason,
        covariance,
        free_names: layout.names(),
        options: lm.options,
        guess_quality,
    })
}
