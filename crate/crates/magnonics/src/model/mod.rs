//! Closed-form physics of the hybrid magnon-photon system.
//!
//! Everything here is a pure function of its arguments: transmission and
//! reflection spectra, complex normal modes, the coupling-scaling law,
//! cooperativity, occupations, and the linewidth temperature model. Values
//! are freely shareable across threads.

mod scaling;
mod spectra;
mod thermal;
mod types;

pub use scaling::{
    cooperativity, coupling_from_sphere, single_spin_coupling, spin_count, G0_CONVENTION_NOTE,
};
pub use spectra::{
    normal_modes, reflection, transmission, transmission_multimode, transmission_partials,
    TransmissionPartials,
};
pub use thermal::{
    dbm_to_watts, intracavity_photons, thermal_occupation, tls_linewidth, total_linewidth,
    watts_to_dbm,
};
pub use types::{
    kittel_frequency, CavityGeom, FieldCalib, HybridParams, ModelError, PhysicalConstants,
    SphereSpec, SpuriousMode, TempModel,
};
