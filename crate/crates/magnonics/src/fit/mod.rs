//! Damped least-squares engine and the model-specific fitters built on it.
//!
//! The engine is reentrant and allocation-local, so independent fits (map
//! columns, Monte-Carlo replicas) can run in parallel with results that do
//! not depend on scheduling.

mod guess;
mod lm;
mod map;
mod series;
mod sweep;

pub use guess::{initial_guess, GuessQuality, SweepGuess};
pub use lm::{jacobian_fd, lm_minimize, LmResult, StopReason};
pub use map::{fit_map, ColumnFit, GlobalEstimates, MapFit, MapFitConfig};
pub use series::{fit_scaling, fit_temperature, ScalingFit, TempFit, TempFitOptions};
pub use sweep::{fit_sweep, ParamErrors, SweepFit, SweepFitConfig, SweepInit};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

/// Errors raised by the fitting layer.
#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid fit options: {0}")]
    InvalidOptions(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("map fit failed: {0}")]
    MapFit(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Instrument transfer function removed alongside the physical fit: a global
/// complex amplitude, an electrical delay, and an additive background.
///
/// Applied to a model value `s` at frequency `f` as
/// `amplitude · exp(i(phase − 2π·f·delay)) · s + background`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationNuisance {
    /// Overall gain (> 0, dimensionless).
    pub amplitude: f64,
    /// Global phase offset (rad).
    pub phase: f64,
    /// Electrical delay (s).
    pub electrical_delay: f64,
    /// Additive complex background.
    pub background_re: f64,
    pub background_im: f64,
}

impl Default for CalibrationNuisance {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            phase: 0.0,
            electrical_delay: 0.0,
            background_re: 0.0,
            background_im: 0.0,
        }
    }
}

impl CalibrationNuisance {
    pub fn background(&self) -> Complex64 {
        Complex64::new(self.background_re, self.background_im)
    }

    /// Apply the transfer function to a model value at frequency `f` (Hz).
    pub fn apply(&self, f: f64, s: Complex64) -> Complex64 {
        let phase = self.phase - std::f64::consts::TAU * f * self.electrical_delay;
        self.amplitude * Complex64::from_polar(1.0, phase) * s + self.background()
    }

    pub fn is_identity(&self) -> bool {
        self.amplitude == 1.0
            && self.phase == 0.0
            && self.electrical_delay == 0.0
            && self.background_re == 0.0
            && self.background_im == 0.0
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let all = [
            self.amplitude,
            self.phase,
            self.electrical_delay,
            self.background_re,
            self.background_im,
        ];
        if all.iter().any(|v| !v.is_finite()) || self.amplitude <= 0.0 {
            return Err(FitError::InvalidInput(
                "nuisance parameters must be finite with amplitude > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Knobs of the damped least-squares engine. Defaults are conventional and
/// recorded in every result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative decrease of the cost below which an accepted step counts as
    /// converged.
    pub cost_tolerance: f64,
    /// Infinity-norm of the gradient Jᵀr below which the point counts as
    /// stationary.
    pub gradient_tolerance: f64,
    pub initial_damping: f64,
    pub damping_up_factor: f64,
    pub damping_down_factor: f64,
    /// Relative central-difference step for Jacobians.
    pub finite_difference_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cost_tolerance: 1e-10,
            gradient_tolerance: 1e-12,
            initial_damping: 1e-3,
            damping_up_factor: 10.0,
            damping_down_factor: 0.1,
            finite_difference_step: 1e-6,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.max_iterations == 0 {
            return Err(FitError::InvalidOptions("max_iterations must be >= 1".into()));
        }
        let positives = [
            ("cost_tolerance", self.cost_tolerance),
            ("gradient_tolerance", self.gradient_tolerance),
            ("initial_damping", self.initial_damping),
            ("damping_up_factor", self.damping_up_factor),
            ("damping_down_factor", self.damping_down_factor),
            ("finite_difference_step", self.finite_difference_step),
        ];
        for (name, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err(FitError::InvalidOptions(format!("{name} must be finite and > 0")));
            }
        }
        if !(self.damping_up_factor > 1.0 && self.damping_down_factor < 1.0) {
            return Err(FitError::InvalidOptions(
                "need damping_up_factor > 1 > damping_down_factor".into(),
            ));
        }
        Ok(())
    }
}
