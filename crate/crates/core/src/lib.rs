//! Information retrievable by photon counting under thermal illumination.
//!
//! Each field oscillator of thermal light carries a Bose–Einstein (geometric)
//! photon-count law whose mean is set by the object's reflectivity. This crate
//! models that channel, solves and verifies its peak-constrained capacity,
//! integrates the per-oscillator capacity over a radiometric scene, and checks
//! the analytic figures with a seeded Monte Carlo readout.
//!
//! All information quantities are in nats; convert with [`NATS_TO_BITS`] at
//! presentation time.

pub mod capacity_solver;
pub mod error;
pub mod photon_channel;
pub mod quadrature;
pub mod radiometry;
pub mod readout_sim;

pub use capacity_solver::{
    find_two_point_threshold, solve_capacity, verify_two_point_kkt, Bracket, CapacityResult,
    KktReport, SolverConfig, Threshold, KKT_TOLERANCE,
};
pub use error::{Error, Result};
pub use photon_channel::{
    gibbs_pmf, information_density, level_to_nbar, mutual_information, nbar_to_level,
    optimal_two_point_distribution, two_point_capacity, two_point_weight, Atom, GeometricChannel,
    InputDistribution, SignalLevel,
};
pub use quadrature::Estimate;
pub use radiometry::{
    bits_per_photon, degrees_of_freedom, eta_constant, flux_p, max_rate_rm, nats_per_photon,
    per_oscillator_info, photon_count_total, planck_information, resolution_cell, sigma_constant,
    total_info_jm, Band, DegreesOfFreedom, FlatSpectrum, PhysicalConstants, PlanckSource,
    RadiometricScene, ResolutionCell, SpectralModel, Warning,
};
pub use readout_sim::{
    empirical_nats_per_photon, run_simulation, sample_count, MapDetector, PhotonRatioEstimate,
    SimulationConfig, SimulationReport,
};

/// Multiply a value in nats by this to get bits.
pub const NATS_TO_BITS: f64 = std::f64::consts::LOG2_E;
