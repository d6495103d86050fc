use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use super::{nearest_psd, sample_moments, SeparableSet};
use crate::market_data::ReturnMatrix;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct BootstrapOptions {
    pub parallel: bool,
    /// Upper bound on buffered resample statistics (number of f64 values).
    /// Larger problems are processed in several passes over the resamples.
    pub max_buffered_values: usize,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            parallel: true,
            max_buffered_values: 1 << 24,
        }
    }
}

/// 1-based nearest rank `ceil(p * count)`, clamped to `[1, count]`.
///
/// A tolerance of `1e-9` absorbs representation error so that e.g.
/// `0.975 * 8000` maps to rank 7800.
pub fn nearest_rank(p: f64, count: usize) -> usize {
    let raw = (p * count as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(count)
}

/// Statistic `k` of the flattened (mean, upper-triangle covariance) layout.
#[derive(Clone, Copy)]
enum Entry {
    Mean(usize),
    Cov(usize, usize),
}

fn entries(n_assets: usize) -> Vec<Entry> {
    let mut out: Vec<Entry> = (0..n_assets).map(Entry::Mean).collect();
    for i in 0..n_assets {
        for j in i..n_assets {
            out.push(Entry::Cov(i, j));
        }
    }
    out
}

fn resample_moments(data: &DMatrix<f64>, seed: u64, index: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = data.nrows();
    let mut rng = rng::stream_rng(seed, index as u64);
    let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let resampled = DMatrix::from_fn(n, data.ncols(), |t, j| data[(picks[t], j)]);
    sample_moments(&resampled)
}

pub fn bootstrap_separable(returns: &ReturnMatrix, alpha: f64, beta: usize, seed: u64) -> Result<SeparableSet> {
    bootstrap_separable_with(returns, alpha, beta, seed, BootstrapOptions::default())
}

/// Nonparametric bootstrap of the mean and covariance.
///
/// Resample `b` draws `n` row indices with replacement from ChaCha20 stream
/// `b` of `seed`, so serial and parallel runs agree bitwise. Bounds are
/// nearest-rank order statistics at `alpha/2` and `1 - alpha/2`.
pub fn bootstrap_separable_with(
    returns: &ReturnMatrix,
    alpha: f64,
    beta: usize,
    seed: u64,
    options: BootstrapOptions,
) -> Result<SeparableSet> {
    let n = returns.n_obs();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "bootstrap needs at least 2 observations, got {n}"
        )));
    }
    if beta < 100 {
        return Err(Error::InvalidArgument(format!("beta must be >= 100, got {beta}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }

    let n_assets = returns.n_assets();
    let data = &returns.returns;
    let all = entries(n_assets);
    let chunk_len = (options.max_buffered_values / beta).max(1);
    let rank_lo = nearest_rank(0.5 * alpha, beta) - 1;
    let rank_hi = nearest_rank(1.0 - 0.5 * alpha, beta) - 1;

    let mut mu_lo = DVector::zeros(n_assets);
    let mut mu_hi = DVector::zeros(n_assets);
    let mut sigma_lo = DMatrix::zeros(n_assets, n_assets);
    let mut sigma_hi = DMatrix::zeros(n_assets, n_assets);

    for chunk in all.chunks(chunk_len) {
        let extract = |b: usize| -> Vec<f64> {
            let (mean, cov) = resample_moments(data, seed, b);
            chunk
                .iter()
                .map(|e| match *e {
                    Entry::Mean(i) => mean[i],
                    Entry::Cov(i, j) => cov[(i, j)],
                })
                .collect()
        };
        let per_resample: Vec<Vec<f64>> = if options.parallel {
            (0..beta).into_par_iter().map(extract).collect()
        } else {
            (0..beta).map(extract).collect()
        };

        let mut column = vec![0.0; beta];
        for (k, entry) in chunk.iter().enumerate() {
            for (slot, stats) in column.iter_mut().zip(&per_resample) {
                *slot = stats[k];
            }
            column.sort_unstable_by(f64::total_cmp);
            let (lo, hi) = (column[rank_lo], column[rank_hi]);
            match *entry {
                Entry::Mean(i) => {
                    mu_lo[i] = lo;
                    mu_hi[i] = hi;
                }
                Entry::Cov(i, j) => {
                    sigma_lo[(i, j)] = lo;
                    sigma_lo[(j, i)] = lo;
                    sigma_hi[(i, j)] = hi;
                    sigma_hi[(j, i)] = hi;
                }
            }
        }
    }

    let repaired = nearest_psd(&sigma_hi, 0.0)?;
    let sigma_hi_repaired = repaired != sigma_hi;

    Ok(SeparableSet {
        mu_lo,
        mu_hi,
        sigma_lo,
        sigma_hi: repaired,
        alpha,
        beta,
        seed,
        sigma_hi_repaired,
    })
}
