//! Exact simulation of independent Hadamard quantum walks on the integer
//! line, started from a Poisson field with a slowly varying intensity.
//!
//! - [`walk`]: single-walker amplitudes and measurement laws.
//! - [`analytics`]: the limit density, the macroscopic profile `ρ(t, x)` and
//!   the exact finite-scale Poisson intensity.
//! - [`ensemble`]: Poisson initial fields, measured occupation fields and
//!   empirical functionals.
//! - [`stats`]: distances to limiting laws and convergence scans.

pub mod analytics;
pub mod ensemble;
pub mod profile;
pub mod quadrature;
pub mod stats;
pub mod walk;

pub use analytics::{cdf_f, density_f, density_f_t, intensity_b, rho, AnalyticsError};
pub use ensemble::{
    empirical_functional, measure_field, sample_field, window_histogram, CountHistogram, EnsembleError,
    Experiment, FieldConfiguration, LaplaceExponent, MonteCarloEstimate, OccupationField, RandomSource,
};
pub use profile::{Profile, ProfileError};
pub use stats::{
    hydro_scan, ks_distance_to_limit, local_equilibrium_scan, poisson_fit, tv_distance, ConvergenceReport,
    PoissonFit, StatsError,
};
pub use walk::{averaged_kernel, chirality_kernel, Amplitude, CoinTag, PositionDistribution, SpinorState};

/// Crate name and version, embedded in output headers.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
