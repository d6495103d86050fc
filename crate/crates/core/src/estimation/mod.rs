//! Moment estimates and calibration of the three uncertainty sets.

mod bootstrap;
mod moments;
mod psd;
mod quantile;
mod sets;

pub use bootstrap::{bootstrap_separable, bootstrap_separable_with, nearest_rank, BootstrapOptions};
pub use moments::{estimate_moments, sample_moments, MomentEstimates};
pub use psd::nearest_psd;
pub use quantile::{chi_square_quantile, normal_quantile};
pub use sets::{calibrate_all, calibrate_box, calibrate_ellipsoid, BoxSet, Calibration, EllipsoidSet, SeparableSet};

/// Recorded in every report: how the estimation-error covariance is formed.
pub const SIGMA_MU_CONVENTION: &str = "sigma_mu = sigma_hat / n (covariance of the sample-mean estimator)";

/// Recorded in every report: covariance estimator.
pub const COVARIANCE_CONVENTION: &str = "maximum likelihood (divisor n)";
