//! Input-output spectra of the hybrid system: transmission, reflection, and
//! the complex normal modes of the coupled cavity-magnon pair.

use num_complex::Complex64;

use super::types::{HybridParams, ModelError, SpuriousMode};

/// Magnon susceptibility term g²/(i(f−f_mode) − γ/2).
///
/// Returns zero for g = 0 and an error on the exact undamped pole
/// (f = f_mode with γ = 0 while g > 0).
fn magnon_term(f: f64, f_mode: f64, gamma: f64, g: f64) -> Result<Complex64, ModelError> {
    if g == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let den = Complex64::new(-0.5 * gamma, f - f_mode);
    if den == Complex64::new(0.0, 0.0) {
        return Err(ModelError::SingularModel {
            f_hz: f,
            context: format!("undamped magnon resonance at f_mode = {f_mode} Hz"),
        });
    }
    Ok(Complex64::new(g * g, 0.0) / den)
}

/// Denominator of the transmission model:
/// i(f−f_c) − κ_tot/2 + Σ_k g_k²/(i(f−f_k) − γ_k/2).
pub(crate) fn denominator(
    f: f64,
    p: &HybridParams,
    extras: &[SpuriousMode],
) -> Result<Complex64, ModelError> {
    let mut d = Complex64::new(-0.5 * p.kappa_total(), f - p.f_c);
    d += magnon_term(f, p.f_fmr, p.gamma_m, p.g_m)?;
    for m in extras {
        d += magnon_term(f, m.f_mode, m.gamma, m.g)?;
    }
    if d == Complex64::new(0.0, 0.0) {
        return Err(ModelError::SingularModel {
            f_hz: f,
            context: "transmission denominator vanishes (undamped pole)".into(),
        });
    }
    Ok(d)
}

/// Complex transmission coefficient S21(f) of the hybrid system:
///
/// S21 = √(κ₁κ₂) / [ i(f−f_c) − κ_tot/2 + g_m²/(i(f−f_fmr) − γ_m/2) ]
///
/// All quantities enter in the same /2π units (Hz); the expression is a
/// ratio of rates, so its value is invariant under a common rescaling.
pub fn transmission(f: f64, p: &HybridParams) -> Result<Complex64, ModelError> {
    transmission_multimode(f, p, &[])
}

/// Transmission with additional weakly coupled magnetostatic modes: each
/// extra adds g_k²/(i(f−f_k) − γ_k/2) to the denominator. An empty list
/// reproduces [`transmission`] exactly.
pub fn transmission_multimode(
    f: f64,
    p: &HybridParams,
    extras: &[SpuriousMode],
) -> Result<Complex64, ModelError> {
    let num = (p.kappa_1 * p.kappa_2).sqrt();
    Ok(Complex64::new(num, 0.0) / denominator(f, p, extras)?)
}

/// One-port reflection coefficient from the input side:
///
/// S11 = 1 + κ₁ / [ i(f−f_c) − κ_tot/2 + Σ magnon terms ]
///
/// The sign convention is chosen so that |S11| ≤ 1 for all f and S11 → 1 far
/// off resonance.
pub fn reflection(
    f: f64,
    p: &HybridParams,
    extras: &[SpuriousMode],
) -> Result<Complex64, ModelError> {
    Ok(Complex64::new(1.0, 0.0) + Complex64::new(p.kappa_1, 0.0) / denominator(f, p, extras)?)
}

/// Complex normal-mode frequencies of the coupled pair, ordered by real part.
///
/// The denominator of the transmission model, cleared of the magnon fraction,
/// is the quadratic −(f − a)(f − b) + g² with a = f_c − iκ_tot/2 and
/// b = f_fmr − iγ_m/2; its roots are
///
/// f̃± = (a + b)/2 ± √( ((a − b)/2)² + g² ).
///
/// The real part is the mode frequency and −2× the imaginary part its
/// linewidth (FWHM, Hz).
pub fn normal_modes(p: &HybridParams) -> (Complex64, Complex64) {
    let a = Complex64::new(p.f_c, -0.5 * p.kappa_total());
    let b = Complex64::new(p.f_fmr, -0.5 * p.gamma_m);
    let mid = 0.5 * (a + b);
    let half_det = 0.5 * (a - b);
    let s = (half_det * half_det + p.g_m * p.g_m).sqrt();
    let (lo, hi) = (mid - s, mid + s);
    if lo.re <= hi.re {
        (lo, hi)
    } else {
        (hi, lo)
    }
}

/// Analytic partial derivatives of S21 with respect to the seven hybrid
/// parameters, used as a cross-check for finite-difference Jacobians.
#[derive(Debug, Clone, Copy)]
pub struct TransmissionPartials {
    pub d_f_c: Complex64,
    pub d_kappa_1: Complex64,
    pub d_kappa_2: Complex64,
    pub d_kappa_int: Complex64,
    pub d_f_fmr: Complex64,
    pub d_gamma_m: Complex64,
    pub d_g_m: Complex64,
}

/// Closed-form gradient of [`transmission`] at `f`.
///
/// Requires κ₁, κ₂ > 0 so the √(κ₁κ₂) derivative exists.
pub fn transmission_partials(f: f64, p: &HybridParams) -> Result<TransmissionPartials, ModelError> {
    if p.kappa_1 <= 0.0 || p.kappa_2 <= 0.0 {
        return Err(ModelError::Domain(
            "analytic partials need strictly positive port couplings".into(),
        ));
    }
    let num = (p.kappa_1 * p.kappa_2).sqrt();
    let den = denominator(f, p, &[])?;
    let inv_d2 = Complex64::new(1.0, 0.0) / (den * den);
    let mag_den = Complex64::new(-0.5 * p.gamma_m, f - p.f_fmr);
    let mag_den2 = mag_den * mag_den;
    let g2 = p.g_m * p.g_m;
    let i = Complex64::i();

    Ok(TransmissionPartials {
        // dD/df_c = -i
        d_f_c: i * num * inv_d2,
        // dN/dk1 = k2/(2N); dD/dk1 = -1/2
        d_kappa_1: Complex64::new(0.5 * p.kappa_2 / num, 0.0) / den + 0.5 * num * inv_d2,
        d_kappa_2: Complex64::new(0.5 * p.kappa_1 / num, 0.0) / den + 0.5 * num * inv_d2,
        d_kappa_int: 0.5 * num * inv_d2,
        // dD/df_fmr = i g^2 / mag_den^2
        d_f_fmr: -num * inv_d2 * (i * g2 / mag_den2),
        // dD/dgamma = g^2 / (2 mag_den^2)
        d_gamma_m: -num * inv_d2 * (0.5 * g2 / mag_den2),
        // dD/dg = 2 g / mag_den
        d_g_m: -num * inv_d2 * (2.0 * p.g_m / mag_den),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_params() -> HybridParams {
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

    #[test]
    fn bare_cavity_on_resonance_amplitude() {
        // With g = 0 at f = f_c the magnitude is 2*sqrt(k1 k2)/k_tot.
        let mut p = paper_params();
        p.g_m = 0.0;
        let expected = 2.0 * (p.kappa_1 * p.kappa_2).sqrt() / p.kappa_total();
        assert_relative_eq!(expected, 0.3358, epsilon = 1e-4);
        let s = transmission(p.f_c, &p).unwrap();
        assert_relative_eq!(s.norm(), expected, max_relative = 1e-12);
    }

    #[test]
    fn hybrid_on_resonance_is_deeply_suppressed() {
        // At degeneracy the magnon term adds 2g^2/gamma to the real denominator.
        let p = paper_params();
        let expected = (p.kappa_1 * p.kappa_2).sqrt()
            / (0.5 * p.kappa_total() + 2.0 * p.g_m * p.g_m / p.gamma_m);
        let s = transmission(p.f_c, &p).unwrap();
        assert_relative_eq!(s.norm(), expected, max_relative = 1e-12);
        assert!((s.norm() - 1.1e-4).abs() < 1e-5);
    }

    #[test]
    fn zero_coupling_zero_kappa_gives_zero_off_resonance() {
        let p = HybridParams {
            f_c: 10.0e9,
            kappa_1: 0.0,
            kappa_2: 0.0,
            kappa_int: 0.0,
            f_fmr: 10.0e9,
            gamma_m: 0.0,
            g_m: 0.0,
        };
        let s = transmission(10.1e9, &p).unwrap();
        assert_eq!(s, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn undamped_magnon_pole_is_singular() {
        let mut p = paper_params();
        p.gamma_m = 0.0;
        let err = transmission(p.f_fmr, &p).unwrap_err();
        assert!(matches!(err, ModelError::SingularModel { .. }));
    }

    #[test]
    fn empty_extras_reproduce_single_mode() {
        let p = paper_params();
        for k in 0..50 {
            let f = 10.4e9 + 3e6 * k as f64;
            let a = transmission(f, &p).unwrap();
            let b = transmission_multimode(f, &p, &[]).unwrap();
            assert!((a - b).norm() <= 1e-15 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn zero_coupling_extra_is_inert() {
        let p = paper_params();
        let extra = SpuriousMode { f_mode: 10.5e9, g: 0.0, gamma: 1.0e6 };
        let f = 10.55e9;
        assert_eq!(
            transmission(f, &p).unwrap(),
            transmission_multimode(f, &p, &[extra]).unwrap()
        );
    }

    #[test]
    fn far_detuned_extra_shifts_little() {
        // Dispersive limit: a 5 MHz mode detuned 1 GHz perturbs the response
        // at f_c by ~ g_k^2/Delta ~ 25 kHz, i.e. below 1e-3 relative.
        let p = paper_params();
        let extra = SpuriousMode { f_mode: p.f_c + 1.0e9, g: 5.0e6, gamma: 1.0e6 };
        let s0 = transmission(p.f_c, &p).unwrap();
        let s1 = transmission_multimode(p.f_c, &p, &[extra]).unwrap();
        assert!((s1 - s0).norm() / s0.norm() < 1e-3);
    }

    #[test]
    fn reflection_on_resonance_bare_cavity() {
        let mut p = paper_params();
        p.g_m = 0.0;
        let s11 = reflection(p.f_c, &p, &[]).unwrap();
        let expected = 1.0 - 2.0 * p.kappa_1 / p.kappa_total();
        assert_relative_eq!(s11.re, expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 0.9011, epsilon = 1e-4);
        assert!(s11.im.abs() < 1e-12);
    }

    #[test]
    fn reflection_uncoupled_port_is_unity() {
        let mut p = paper_params();
        p.kappa_1 = 0.0;
        for k in 0..20 {
            let f = 10.3e9 + 30e6 * k as f64;
            let s11 = reflection(f, &p, &[]).unwrap();
            assert_eq!(s11, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn reflection_off_resonant_limit() {
        let p = paper_params();
        let s11 = reflection(p.f_c + 1e12, &p, &[]).unwrap();
        assert!((s11 - Complex64::new(1.0, 0.0)).norm() < 1e-5);
        assert!(s11.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn lossless_degenerate_modes_split_by_coupling() {
        let p = HybridParams {
            f_c: 10.0e9,
            kappa_1: 0.0,
            kappa_2: 0.0,
            kappa_int: 0.0,
            f_fmr: 10.0e9,
            gamma_m: 0.0,
            g_m: 25.0e6,
        };
        let (lo, hi) = normal_modes(&p);
        assert_relative_eq!(lo.re, 10.0e9 - 25.0e6, max_relative = 1e-14);
        assert_relative_eq!(hi.re, 10.0e9 + 25.0e6, max_relative = 1e-14);
        assert_eq!(lo.im, 0.0);
        assert_eq!(hi.im, 0.0);
    }

    #[test]
    fn paper_modes_split_by_two_g_at_degeneracy() {
        // Loss correction ((kappa-gamma)/4)^2 is negligible against g^2.
        let p = paper_params();
        let (lo, hi) = normal_modes(&p);
        assert!((hi.re - (10.565e9 + 47.0e6)).abs() < 0.1e6);
        assert!((lo.re - (10.565e9 - 47.0e6)).abs() < 0.1e6);
        // Both modes inherit the average linewidth at degeneracy.
        let avg = 0.25 * (p.kappa_total() + p.gamma_m);
        assert_relative_eq!(-lo.im, avg, max_relative = 1e-6);
        assert_relative_eq!(-hi.im, avg, max_relative = 1e-6);
    }

    #[test]
    fn dispersive_pull_matches_g_squared_over_delta() {
        let mut p = paper_params();
        p.f_fmr = p.f_c + 1.0e9;
        let (lo, _hi) = normal_modes(&p);
        let pull = p.f_c - lo.re;
        let dispersive = p.g_m * p.g_m / (p.f_fmr - p.f_c);
        assert!((pull / dispersive - 1.0).abs() < 0.01, "pull {pull} vs {dispersive}");
    }

    #[test]
    fn modes_zero_the_denominator() {
        let p = paper_params();
        let (lo, hi) = normal_modes(&p);
        for root in [lo, hi] {
            // Evaluate D at the complex root via the cleared quadratic to
            // confirm the root, then the physical denominator at Re(root).
            let a = Complex64::new(p.f_c, -0.5 * p.kappa_total());
            let b = Complex64::new(p.f_fmr, -0.5 * p.gamma_m);
            let q = -(root - a) * (root - b) + p.g_m * p.g_m;
            assert!(q.norm() < 1e-9 * p.kappa_total() * (root - b).norm());
            // Full complex-argument denominator: i(z-a_shifted) form.
            let d = Complex64::i() * (root - a) + p.g_m * p.g_m / (Complex64::i() * (root - b));
            assert!(d.norm() < 1e-9 * p.kappa_total(), "|D| = {}", d.norm());
        }
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let p = paper_params();
        let f = p.f_c + 12.0e6;
        let partials = transmission_partials(f, &p).unwrap();
        let step = 1.0; // Hz; tiny relative to GHz scales
        let fd = |plus: HybridParams, minus: HybridParams, h: f64| {
            (transmission(f, &plus).unwrap() - transmission(f, &minus).unwrap()) / (2.0 * h)
        };
        let mut up = p;
        let mut dn = p;
        up.f_c += step;
        dn.f_c -= step;
        let d_fc = fd(up, dn, step);
        assert!((d_fc - partials.d_f_c).norm() / partials.d_f_c.norm() < 1e-5);

        let mut up = p;
        let mut dn = p;
        up.g_m += step;
        dn.g_m -= step;
        let d_g = fd(up, dn, step);
        assert!((d_g - partials.d_g_m).norm() / partials.d_g_m.norm() < 1e-5);

        let mut up = p;
        let mut dn = p;
        up.gamma_m += step;
        dn.gamma_m -= step;
        let d_gamma = fd(up, dn, step);
        assert!((d_gamma - partials.d_gamma_m).norm() / partials.d_gamma_m.norm() < 1e-4);
    }
}
