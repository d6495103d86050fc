use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::serde_rowmajor;
use crate::market_data::ReturnMatrix;
use crate::{Error, Result};

/// Point estimates of the return distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimates {
    #[serde(with = "serde_rowmajor::vector")]
    pub mu_hat: DVector<f64>,
    /// Maximum-likelihood covariance (divisor `n`).
    #[serde(with = "serde_rowmajor::matrix")]
    pub sigma_hat: DMatrix<f64>,
    pub n: usize,
    #[serde(with = "serde_rowmajor::vector")]
    pub per_asset_std: DVector<f64>,
}

impl MomentEstimates {
    /// Builds estimates from given moments (e.g. a known ground truth).
    pub fn from_parts(mu_hat: DVector<f64>, sigma_hat: DMatrix<f64>, n: usize) -> Result<Self> {
        let n_assets = mu_hat.len();
        if sigma_hat.nrows() != n_assets || sigma_hat.ncols() != n_assets {
            return Err(Error::DimensionMismatch(format!(
                "mean has {n_assets} entries but covariance is {}x{}",
                sigma_hat.nrows(),
                sigma_hat.ncols()
            )));
        }
        crate::linalg::ensure_symmetric(&sigma_hat)?;
        if sigma_hat.diagonal().iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidArgument("negative variance on the diagonal".into()));
        }
        let per_asset_std = sigma_hat.diagonal().map(f64::sqrt);
        Ok(Self {
            mu_hat,
            sigma_hat,
            n,
            per_asset_std,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.mu_hat.len()
    }
}

/// Column means and MLE covariance of an `n x N` data block. The covariance
/// is exactly symmetric.
///
/// Columns are shifted by their first entry before averaging, so a constant
/// column gives its value back exactly and zero variance.
pub fn sample_moments(data: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = data.nrows() as f64;
    let mut centered = data.clone();
    let mut mean = DVector::zeros(data.ncols());
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let shift = col[0];
        col.add_scalar_mut(-shift);
        let offset = col.mean();
        col.add_scalar_mut(-offset);
        mean[j] = shift + offset;
    }
    let mut cov = centered.tr_mul(&centered) / n;
    for i in 0..cov.nrows() {
        for j in 0..i {
            cov[(i, j)] = cov[(j, i)];
        }
    }
    (mean, cov)
}

pub fn estimate_moments(returns: &ReturnMatrix) -> Result<MomentEstimates> {
    let n = returns.n_obs();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "moment estimation needs at least 2 observations, got {n}"
        )));
    }
    let (mu_hat, sigma_hat) = sample_moments(&returns.returns);
    let per_asset_std = sigma_hat.diagonal().map(f64::sqrt);
    Ok(MomentEstimates {
        mu_hat,
        sigma_hat,
        n,
        per_asset_std,
    })
}
