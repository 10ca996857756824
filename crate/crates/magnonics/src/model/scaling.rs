//! Coupling-strength scaling with sample size, and the cooperativity figure
//! of merit.

use super::types::{CavityGeom, ModelError, PhysicalConstants, SphereSpec};

/// Convention note attached to every report that quotes the single-spin
/// coupling. The textbook vacuum-field expression γ_e·√(μ₀hf_c/V_c)
/// evaluates to twice the commonly quoted value for this geometry, so the
/// toolkit adopts the ½ prefactor that reproduces the quoted ~38 mHz.
pub const G0_CONVENTION_NOTE: &str = "single-spin coupling uses g0 = (gamma_e/2) * sqrt(mu0 * h * f_c / V_c); \
     the 1/2 prefactor is a convention choice that reproduces the quoted \
     ~38 mHz for the TE101 mode (the bare formula gives twice that)";

/// Number of net spins in a sphere: N = spin_density · (π/6)d³.
pub fn spin_count(s: &SphereSpec) -> f64 {
    s.spin_density * s.volume()
}

/// Coupling strength of a single Bohr magneton to the cavity mode (Hz):
///
/// g₀ = (γ_e/2) · √( μ₀ · h · f_c / V_c )
///
/// See [`G0_CONVENTION_NOTE`] for the ½ prefactor.
pub fn single_spin_coupling(cavity: &CavityGeom, f_c: f64, consts: &PhysicalConstants) -> f64 {
    let v_c = cavity.volume();
    0.5 * consts.gyromagnetic_gamma_e
        * (consts.vacuum_permeability_mu0 * consts.planck_h * f_c / v_c).sqrt()
}

/// Collective coupling of the Kittel mode, g_m = g₀√N, from the cavity
/// geometry and the sphere sample.
pub fn coupling_from_sphere(
    cavity: &CavityGeom,
    f_c: f64,
    sphere: &SphereSpec,
    consts: &PhysicalConstants,
) -> f64 {
    single_spin_coupling(cavity, f_c, consts) * spin_count(sphere).sqrt()
}

/// Cooperativity C = 4g²/(κγ).
///
/// Dimensionless and invariant under a common rescaling of all three rates.
pub fn cooperativity(g_m: f64, kappa_total: f64, gamma_m: f64) -> Result<f64, ModelError> {
    if kappa_total <= 0.0 || gamma_m <= 0.0 {
        return Err(ModelError::Domain(
            "cooperativity needs kappa_total > 0 and gamma_m > 0".into(),
        ));
    }
    Ok(4.0 * g_m * g_m / (kappa_total * gamma_m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn te101_cavity() -> CavityGeom {
        CavityGeom { lx: 22e-3, ly: 18e-3, lz: 3e-3 }
    }

    #[test]
    fn spin_count_half_millimeter_sphere() {
        // N = 2.1e28 * (pi/6) * (0.5e-3)^3 = 1.374e18
        let n = spin_count(&SphereSpec::yig(0.5e-3));
        assert_relative_eq!(n, 1.374e18, max_relative = 1e-3);
        assert_eq!(spin_count(&SphereSpec::yig(0.0)), 0.0);
        // cubic scaling
        let n2 = spin_count(&SphereSpec::yig(1.0e-3));
        assert_relative_eq!(n2 / n, 8.0, max_relative = 1e-12);
        assert_relative_eq!(n2, 1.10e19, max_relative = 1e-2);
    }

    #[test]
    fn single_spin_coupling_te101() {
        let g0 = single_spin_coupling(&te101_cavity(), 10.565e9, &PhysicalConstants::default());
        assert!((g0 - 38.1e-3).abs() < 0.5e-3, "g0 = {g0}");
    }

    #[test]
    fn g0_scales_with_volume_and_frequency() {
        let consts = PhysicalConstants::default();
        let c = te101_cavity();
        let g0 = single_spin_coupling(&c, 10.565e9, &consts);
        let quad = CavityGeom { lx: 4.0 * c.lx, ..c };
        assert_relative_eq!(single_spin_coupling(&quad, 10.565e9, &consts), 0.5 * g0, max_relative = 1e-12);
        assert_relative_eq!(single_spin_coupling(&c, 4.0 * 10.565e9, &consts), 2.0 * g0, max_relative = 1e-12);
    }

    #[test]
    fn sphere_coupling_from_fitted_g0() {
        // With the fitted slope g0 = 39 mHz, d = 0.5 mm gives ~45.7 MHz
        // (individually fitted value is 47 MHz).
        let g0 = 39e-3;
        let g = g0 * spin_count(&SphereSpec::yig(0.5e-3)).sqrt();
        assert!((g - 45.7e6).abs() < 0.1e6, "g = {g}");
        let g_large = g0 * spin_count(&SphereSpec::yig(1.0e-3)).sqrt();
        assert!((g_large - 129e6).abs() < 1e6, "g = {g_large}");
        assert_relative_eq!(g_large / g, 8.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn coupling_from_sphere_uses_geometry() {
        let consts = PhysicalConstants::default();
        let g = coupling_from_sphere(&te101_cavity(), 10.565e9, &SphereSpec::yig(0.5e-3), &consts);
        // 38.1 mHz * sqrt(1.374e18) = 44.7 MHz
        assert!((g - 44.7e6).abs() < 0.3e6, "g = {g}");
    }

    #[test]
    fn cooperativity_paper_value() {
        let c = cooperativity(47e6, 2.7e6, 1.1e6).unwrap();
        assert!((c - 2975.0).abs() < 1.0, "C = {c}");
        assert_eq!(cooperativity(0.0, 2.7e6, 1.1e6).unwrap(), 0.0);
        assert!(cooperativity(47e6, 0.0, 1.1e6).is_err());
    }

    #[test]
    fn cooperativity_scale_free() {
        let c1 = cooperativity(47e6, 2.7e6, 1.1e6).unwrap();
        let c2 = cooperativity(47e6 * 8.0, 2.7e6 * 8.0, 1.1e6 * 8.0).unwrap();
        assert_eq!(c1, c2);
    }
}
