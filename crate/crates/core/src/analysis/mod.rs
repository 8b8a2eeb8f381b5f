//! Peak-train model and fit, distribution statistics and derived figures.

mod figures;
mod fit;
mod peaktrain;
mod stats;

pub use figures::{
    compression_temperature, interferometer_metrics, AreaConvention, InterferometerMetrics,
    LINEAR_TRAP_EXPONENT,
};
pub use fit::{
    autocorrelation_period, fit_peak_train, fit_peak_train_with, initial_guess, linear_regression,
    peak_moments, trace_hash, FitOptions, FitResult, PeakMoment, Weighting,
};
pub use peaktrain::{
    peak_train_gradient, peak_train_model, Background, PeakTrainParams, N_PARAMS, PARAM_NAMES,
};
pub use stats::{
    distribution_stats, median, quantile, robust_sigma, stats_from_sigma, DistributionStats,
    FWHM_PER_SIGMA,
};
