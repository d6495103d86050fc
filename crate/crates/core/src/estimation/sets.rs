use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    bootstrap_separable_with, chi_square_quantile, estimate_moments, normal_quantile, BootstrapOptions, MomentEstimates,
};
use crate::linalg::serde_rowmajor;
use crate::market_data::ReturnMatrix;
use crate::{Error, Result};

/// Per-asset intervals `|mu_i - mu_hat_i| <= delta_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    #[serde(with = "serde_rowmajor::vector")]
    pub delta: DVector<f64>,
    pub alpha: f64,
}

/// Ellipsoid `(mu - mu_hat)' sigma_mu^-1 (mu - mu_hat) <= delta_sq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidSet {
    pub delta_sq: f64,
    #[serde(with = "serde_rowmajor::matrix")]
    pub sigma_mu: DMatrix<f64>,
    pub alpha: f64,
}

/// Interval bounds on every entry of the mean and the covariance.
///
/// The worst case on the long-only simplex is `(mu_lo, sigma_hi)`;
/// `mu_hi` and `sigma_lo` are kept for diagnostics. `sigma_hi` has been
/// symmetrized and repaired to be positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableSet {
    #[serde(with = "serde_rowmajor::vector")]
    pub mu_lo: DVector<f64>,
    #[serde(with = "serde_rowmajor::vector")]
    pub mu_hi: DVector<f64>,
    #[serde(with = "serde_rowmajor::matrix")]
    pub sigma_lo: DMatrix<f64>,
    #[serde(with = "serde_rowmajor::matrix")]
    pub sigma_hi: DMatrix<f64>,
    pub alpha: f64,
    pub beta: usize,
    pub seed: u64,
    /// Whether the PSD repair changed `sigma_hi`.
    #[serde(default)]
    pub sigma_hi_repaired: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `delta_i = sigma_i * z_{1 - alpha/2} / sqrt(n)`.
pub fn calibrate_box(moments: &MomentEstimates, alpha: f64) -> Result<BoxSet> {
    check_alpha(alpha)?;
    let z = normal_quantile(1.0 - 0.5 * alpha)?;
    let scale = z / (moments.n as f64).sqrt();
    Ok(BoxSet {
        delta: moments.per_asset_std.map(|s| s * scale),
        alpha,
    })
}

/// `delta_sq = chi2_N^{-1}(1 - alpha)`, `sigma_mu = sigma_hat / n`.
pub fn calibrate_ellipsoid(moments: &MomentEstimates, alpha: f64) -> Result<EllipsoidSet> {
    check_alpha(alpha)?;
    let n_assets = u32::try_from(moments.n_assets()).map_err(|_| Error::InvalidArgument("too many assets".into()))?;
    Ok(EllipsoidSet {
        delta_sq: chi_square_quantile(n_assets, 1.0 - alpha)?,
        sigma_mu: &moments.sigma_hat / moments.n as f64,
        alpha,
    })
}

/// Everything needed to re-run a solve from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha: f64,
    pub beta: usize,
    pub seed: u64,
    pub sigma_mu_convention: String,
    pub moments: MomentEstimates,
    pub box_set: BoxSet,
    pub ellipsoid: EllipsoidSet,
    pub separable: SeparableSet,
}

/// Moments plus all three calibrated sets from one return sample. The
/// separable set is bootstrapped with `seed`.
pub fn calibrate_all(
    returns: &ReturnMatrix,
    alpha: f64,
    beta: usize,
    seed: u64,
    options: BootstrapOptions,
) -> Result<Calibration> {
    let moments = estimate_moments(returns)?;
    let box_set = calibrate_box(&moments, alpha)?;
    let ellipsoid = calibrate_ellipsoid(&moments, alpha)?;
    let separable = bootstrap_separable_with(returns, alpha, beta, seed, options)?;
    Ok(Calibration {
        alpha,
        beta,
        seed,
        sigma_mu_convention: super::SIGMA_MU_CONVENTION.to_string(),
        moments,
        box_set,
        ellipsoid,
        separable,
    })
}
