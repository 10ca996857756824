//! Levenberg-Marquardt minimization of ½‖r(x)‖² with finite-difference
//! Jacobians and Marquardt diagonal scaling of the damping term.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FitError, FitOptions};

const DAMPING_MAX: f64 = 1e14;
const DAMPING_MIN: f64 = 1e-14;
const MAX_INNER_TRIALS: usize = 60;

/// Which stopping criterion ended the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Accepted step reduced the cost by less than the relative tolerance.
    CostTolerance,
    /// ‖Jᵀr‖∞ fell below the gradient tolerance.
    GradientTolerance,
    /// Nothing to optimize.
    EmptyParameterVector,
    /// Iteration budget exhausted (not converged).
    MaxIterations,
    /// No acceptable step found even at maximum damping (not converged).
    Stalled,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::CostTolerance => "cost_tolerance",
            StopReason::GradientTolerance => "gradient_tolerance",
            StopReason::EmptyParameterVector => "empty_parameter_vector",
            StopReason::MaxIterations => "max_iterations",
            StopReason::Stalled => "stalled",
        }
    }
}

/// Outcome of [`lm_minimize`].
#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// One-sigma errors from σ̂²(JᵀJ)⁻¹ with σ̂² = ‖r‖²/(m−n); the inverse is
    /// a pseudo-inverse when JᵀJ is singular, and σ̂² = 0 when m ≤ n.
    pub standard_errors: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// ‖r‖ at the solution.
    pub residual_norm: f64,
    /// Accepted iterations.
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Cost ½‖r‖² after every accepted step, starting from the initial point.
    pub cost_trace: Vec<f64>,
    /// Options the search ran with.
    pub options: FitOptions,
}

fn check_finite(r: &[f64], context: &str) -> Result<(), FitError> {
    if let Some(idx) = r.iter().position(|v| !v.is_finite()) {
        return Err(FitError::Numerical(format!(
            "non-finite residual component {idx} {context}"
        )));
    }
    Ok(())
}

/// Central-difference Jacobian of a vector-valued function; the step for
/// parameter j is `rel_step · max(|p_j|, 1)`.
pub fn jacobian_fd<F>(f: F, at: &[f64], rel_step: f64) -> Result<DMatrix<f64>, FitError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if !(rel_step.is_finite() && rel_step > 0.0) {
        return Err(FitError::InvalidOptions("finite-difference step must be > 0".into()));
    }
    let n = at.len();
    let probe = f(at);
    check_finite(&probe, "at the expansion point")?;
    let m = probe.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut point = at.to_vec();
    for j in 0..n {
        let h = rel_step * at[j].abs().max(1.0);
        point[j] = at[j] + h;
        let plus = f(&point);
        point[j] = at[j] - h;
        let minus = f(&point);
        point[j] = at[j];
        check_finite(&plus, &format!("probing parameter {j}"))?;
        check_finite(&minus, &format!("probing parameter {j}"))?;
        if plus.len() != m || minus.len() != m {
            return Err(FitError::Numerical("residual length changed between evaluations".into()));
        }
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Minimize ½‖r(x)‖² from `init`.
///
/// Accepted steps never increase the cost. Reaching `max_iterations` flags
/// the result as not converged rather than erroring; a non-finite residual
/// at the initial point or inside a Jacobian probe is a typed error, while a
/// non-finite trial step is treated as a rejected step.
pub fn lm_minimize<F>(residual_fn: F, init: &[f64], opts: &FitOptions) -> Result<LmResult, FitError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    opts.validate()?;
    let n = init.len();

    let r0 = residual_fn(init);
    check_finite(&r0, "at the initial point")?;

    if n == 0 {
        let norm = r0.iter().map(|v| v * v).sum::<f64>().sqrt();
        return Ok(LmResult {
            params: Vec::new(),
            standard_errors: Vec::new(),
            covariance: DMatrix::zeros(0, 0),
            residual_norm: norm,
            iterations: 0,
            converged: true,
            stop_reason: StopReason::EmptyParameterVector,
            cost_trace: vec![0.5 * norm * norm],
            options: *opts,
        });
    }

    let mut p = DVector::from_column_slice(init);
    let mut r = DVector::from_vec(r0);
    let mut cost = 0.5 * r.norm_squared();
    let mut lambda = opts.initial_damping;
    let mut trace = vec![cost];
    let mut iterations = 0usize;
    let mut converged = false;
    let mut stop = StopReason::MaxIterations;

    'outer: for _ in 0..opts.max_iterations {
        let jac = jacobian_fd(&residual_fn, p.as_slice(), opts.finite_difference_step)?;
        let grad = jac.transpose() * &r;
        if grad.amax() <= opts.gradient_tolerance || cost == 0.0 {
            converged = true;
            stop = StopReason::GradientTolerance;
            break;
        }
        let jtj = jac.transpose() * &jac;
        // Marquardt scaling: damp along diag(JᵀJ), floored so exactly flat
        // directions stay solvable without acquiring spurious motion.
        let diag_max = (0..n).map(|i| jtj[(i, i)]).fold(0.0f64, f64::max);
        let floor = diag_max.max(1e-300) * 1e-12;

        let mut accepted = false;
        for _ in 0..MAX_INNER_TRIALS {
            let mut damped = jtj.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * jtj[(i, i)].max(floor);
            }
            let step = match damped.cholesky() {
                Some(chol) => chol.solve(&(-&grad)),
                None => {
                    lambda = (lambda * opts.damping_up_factor).min(DAMPING_MAX);
                    if lambda >= DAMPING_MAX {
                        break;
                    }
                    continue;
                }
            };
            let p_try = &p + &step;
            let r_try = DVector::from_vec(residual_fn(p_try.as_slice()));
            let finite = r_try.iter().all(|v| v.is_finite());
            let cost_try = if finite { 0.5 * r_try.norm_squared() } else { f64::INFINITY };
            if cost_try <= cost {
                let improvement = cost - cost_try;
                p = p_try;
                r = r_try;
                cost = cost_try;
                trace.push(cost);
                iterations += 1;
                lambda = (lambda * opts.damping_down_factor).max(DAMPING_MIN);
                accepted = true;
                if improvement <= opts.cost_tolerance * cost.max(f64::MIN_POSITIVE) {
                    converged = true;
                    stop = StopReason::CostTolerance;
                    break 'outer;
                }
                break;
            }
            lambda = (lambda * opts.damping_up_factor).min(DAMPING_MAX);
            if lambda >= DAMPING_MAX {
                break;
            }
        }
        if !accepted {
            stop = StopReason::Stalled;
            break;
        }
    }

    let jac = jacobian_fd(&residual_fn, p.as_slice(), opts.finite_difference_step)?;
    let (covariance, standard_errors) = covariance_from(&jac, &r, n);

    Ok(LmResult {
        params: p.as_slice().to_vec(),
        standard_errors,
        covariance,
        residual_norm: r.norm(),
        iterations,
        converged,
        stop_reason: stop,
        cost_trace: trace,
        options: *opts,
    })
}

/// Covariance σ̂²(JᵀJ)⁻¹ alone, for callers that assemble their own errors.
pub(crate) fn covariance_of(jac: &DMatrix<f64>, r: &DVector<f64>, n: usize) -> DMatrix<f64> {
    covariance_from(jac, r, n).0
}

fn covariance_from(jac: &DMatrix<f64>, r: &DVector<f64>, n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let m = r.len();
    let sigma2 = if m > n { r.norm_squared() / (m - n) as f64 } else { 0.0 };
    let jtj = jac.transpose() * jac;
    let inv = invert_spd(&jtj);
    let cov = inv.map(|v| v * sigma2);
    let errs = (0..n).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    (cov, errs)
}

/// Invert a symmetric PSD matrix, falling back to the SVD pseudo-inverse
/// when it is singular.
fn invert_spd(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return a.clone();
    }
    if let Some(chol) = a.clone().cholesky() {
        return chol.inverse();
    }
    let svd = a.clone().svd(true, true);
    let eps = svd.singular_values.max() * 1e-13;
    svd.pseudo_inverse(eps.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::zeros(a.nrows(), a.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_problem_solved_within_two_iterations() {
        // Each damped step contracts the error of a linear problem by the
        // damping factor, so two iterations land within ~1e-7 relative.
        let a = 3.75;
        let opts = FitOptions { max_iterations: 2, ..Default::default() };
        let res = lm_minimize(|x| vec![x[0] - a], &[0.0], &opts).unwrap();
        assert!(res.iterations <= 2);
        assert!((res.params[0] - a).abs() < 1e-6 * a, "x = {}", res.params[0]);
        // With the full budget it converges outright.
        let res = lm_minimize(|x| vec![x[0] - a], &[0.0], &FitOptions::default()).unwrap();
        assert!(res.converged);
        assert!((res.params[0] - a).abs() < 1e-10);
    }

    #[test]
    fn rosenbrock_reaches_global_minimum() {
        let rosenbrock = |x: &[f64]| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]];
        let res = lm_minimize(rosenbrock, &[-1.2, 1.0], &FitOptions::default()).unwrap();
        assert!(res.converged, "{:?}", res.stop_reason);
        assert!((res.params[0] - 1.0).abs() < 1e-8, "x = {:?}", res.params);
        assert!((res.params[1] - 1.0).abs() < 1e-8, "x = {:?}", res.params);
    }

    #[test]
    fn empty_parameter_vector_returns_init() {
        let res = lm_minimize(|_| vec![1.0, 2.0], &[], &FitOptions::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.stop_reason, StopReason::EmptyParameterVector);
        assert!(res.params.is_empty());
    }

    #[test]
    fn accepted_costs_never_increase() {
        // Noisy exponential-decay fit exercises several accept/reject cycles.
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|&t| 2.0 * (-1.3 * t).exp() + 0.2 + 0.01 * (7.0 * t).sin()).collect();
        let resid = move |x: &[f64]| -> Vec<f64> {
            t.iter().zip(&y).map(|(&t, &y)| x[0] * (x[1] * t).exp() + x[2] - y).collect()
        };
        let res = lm_minimize(resid, &[1.0, -0.5, 0.0], &FitOptions::default()).unwrap();
        for pair in res.cost_trace.windows(2) {
            assert!(pair[1] <= pair[0], "cost increased: {:?}", pair);
        }
        assert!(res.converged);
        assert!((res.params[1] + 1.3).abs() < 0.05);
    }

    #[test]
    fn non_finite_at_init_is_typed_error() {
        let err = lm_minimize(|x| vec![(x[0]).ln()], &[-1.0], &FitOptions::default()).unwrap_err();
        assert!(matches!(err, FitError::Numerical(_)), "{err:?}");
    }

    #[test]
    fn max_iterations_flags_not_converged() {
        let opts = FitOptions { max_iterations: 2, cost_tolerance: 1e-300, gradient_tolerance: 1e-300, ..Default::default() };
        let rosenbrock = |x: &[f64]| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]];
        let res = lm_minimize(rosenbrock, &[-1.2, 1.0], &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.stop_reason, StopReason::MaxIterations);
    }

    #[test]
    fn covariance_matches_linear_regression_formula() {
        // y = a + b t with unit-ish noise: cov = sigma^2 (X^T X)^-1.
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|&t| 1.0 + 2.0 * t + if t as usize % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let resid = {
            let t = t.clone();
            let y = y.clone();
            move |x: &[f64]| -> Vec<f64> { t.iter().zip(&y).map(|(&t, &y)| x[0] + x[1] * t - y).collect() }
        };
        let res = lm_minimize(&resid, &[0.0, 0.0], &FitOptions::default()).unwrap();
        let m = t.len() as f64;
        let sum_t: f64 = t.iter().sum();
        let sum_tt: f64 = t.iter().map(|v| v * v).sum();
        let ssr: f64 = res.residual_norm * res.residual_norm;
        let sigma2 = ssr / (m - 2.0);
        let det = m * sum_tt - sum_t * sum_t;
        let var_a = sigma2 * sum_tt / det;
        let var_b = sigma2 * m / det;
        assert!((res.standard_errors[0] - var_a.sqrt()).abs() / var_a.sqrt() < 1e-4);
        assert!((res.standard_errors[1] - var_b.sqrt()).abs() / var_b.sqrt() < 1e-4);
    }

    #[test]
    fn fd_jacobian_of_square() {
        let jac = jacobian_fd(|x| vec![x[0] * x[0]], &[3.0], 1e-6).unwrap();
        assert!((jac[(0, 0)] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn fd_jacobian_constant_residual_is_zero() {
        let jac = jacobian_fd(|_| vec![1.0, -2.0], &[0.5, 1.5, -3.0], 1e-6).unwrap();
        assert_eq!(jac, DMatrix::zeros(2, 3));
    }

    #[test]
    fn fd_jacobian_non_finite_probe_is_error() {
        // sqrt goes NaN just left of zero.
        let err = jacobian_fd(|x| vec![x[0].sqrt()], &[1e-9], 1e-2).unwrap_err();
        assert!(matches!(err, FitError::Numerical(_)), "{err:?}");
    }
}
