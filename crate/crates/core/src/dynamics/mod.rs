//! Classical billiard flow, spectra of `r²(t)` and semiclassical band profiles.

pub mod band;
pub mod billiard;
pub mod spectrum;

pub use band::{
    band_profile_from_q, band_profile_from_r2, fp_prediction, improved_exponent, mean_free_path, near_diagonal_slope,
    run_ensemble, space_average_r2, BandProfile, EnsembleConfig, EnsembleResult, FpPrediction, ProfileOptions, SlopeFit,
};
pub use billiard::{evolve, observable_series, random_state, BilliardState, Bounce, RadialBoundary, Trajectory};
pub use spectrum::{pooled_spectral_density, spectral_density, SpectralEstimate, WindowKind};
