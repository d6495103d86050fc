use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::estimation::MomentEstimates;
use crate::linalg;
use crate::optimizer::SolverConfig;
use crate::{Error, Result};

/// `count` points from `lo` to `hi` (inclusive), equally spaced in log scale.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub lambda_grid: Vec<f64>,
    pub frontier_lambdas: Vec<f64>,
    pub rf_annual: f64,
    pub periods_per_year: f64,
    pub alpha: f64,
    pub beta: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    /// Fraction of trailing rows held out for evaluation. `None` evaluates
    /// in-sample on the calibration moments.
    pub test_fraction: Option<f64>,
    /// Run bootstrap resamples and sweep cells on the rayon pool. Output is
    /// identical either way.
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            lambda_grid: vec![2.0, 2.5, 3.0, 3.5, 4.0],
            frontier_lambdas: log_spaced(0.05, 200.0, 60),
            rf_annual: 0.06,
            periods_per_year: 252.0,
            alpha: 0.05,
            beta: 8000,
            seed: 0,
            solver: SolverConfig::default(),
            test_fraction: None,
            parallel: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.lambda_grid.is_empty() || self.frontier_lambdas.is_empty() {
            return bad("lambda grids must be non-empty".into());
        }
        if let Some(l) = self
            .lambda_grid
            .iter()
            .chain(&self.frontier_lambdas)
            .find(|l| !(**l > 0.0 && l.is_finite()))
        {
            return bad(format!("risk aversion must be > 0, got {l}"));
        }
        if !(self.rf_annual >= 0.0 && self.rf_annual < 1.0) {
            return bad(format!("rf_annual must lie in [0, 1), got {}", self.rf_annual));
        }
        if !(self.periods_per_year > 0.0 && self.periods_per_year.is_finite()) {
            return bad(format!("periods_per_year must be > 0, got {}", self.periods_per_year));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if let Some(f) = self.test_fraction {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("test_fraction must lie in (0, 1), got {f}"));
            }
        }
        Ok(())
    }
}

pub fn rf_per_period(config: &EvalConfig) -> f64 {
    config.rf_annual.ln_1p() / config.periods_per_year
}

/// `(mu_hat' x, sqrt(x' sigma_hat x))`.
pub fn portfolio_stats(x: &DVector<f64>, moments: &MomentEstimates) -> Result<(f64, f64)> {
    if x.len() != moments.n_assets() {
        return Err(Error::DimensionMismatch(format!(
            "weights have {} entries, moments describe {} assets",
            x.len(),
            moments.n_assets()
        )));
    }
    let ret = moments.mu_hat.dot(x);
    let risk = linalg::quad_form(&moments.sigma_hat, x).max(0.0).sqrt();
    Ok((ret, risk))
}

pub fn sharpe_ratio(ret: f64, risk: f64, config: &EvalConfig) -> Result<f64> {
    if risk.is_nan() || risk <= 0.0 {
        return Err(Error::UndefinedSharpe);
    }
    Ok((ret - rf_per_period(config)) / risk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn moments() -> MomentEstimates {
        MomentEstimates::from_parts(
            DVector::from_vec(vec![0.01, 0.02, -0.01, 0.0]),
            DMatrix::identity(4, 4),
            100,
        )
        .unwrap()
    }

    #[test]
    fn single_asset_portfolio() {
        let mut m = moments();
        m.sigma_hat[(0, 0)] = 4.0;
        let (ret, risk) = portfolio_stats(&DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]), &m).unwrap();
        assert_eq!((ret, risk), (0.01, 2.0));
    }

    #[test]
    fn uniform_risk() {
        let (_, risk) = portfolio_stats(&DVector::from_element(4, 0.25), &moments()).unwrap();
        assert!((risk - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_mean_zero_return() {
        let mut m = moments();
        m.mu_hat.fill(0.0);
        let (ret, _) = portfolio_stats(&DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]), &m).unwrap();
        assert_eq!(ret, 0.0);
        assert!(portfolio_stats(&DVector::from_element(3, 1.0 / 3.0), &m).is_err());
    }

    #[test]
    fn sharpe_examples() {
        let cfg = EvalConfig::default();
        let rf = rf_per_period(&cfg);
        assert!((rf - 0.000231227).abs() < 5e-9);
        assert!((rf - 0.000_231_225_825_888_792_95).abs() < 1e-16);
        assert_eq!(sharpe_ratio(rf, 0.3, &cfg).unwrap(), 0.0);
        let sr = sharpe_ratio(0.001, 0.01, &cfg).unwrap();
        // 0.0768773 when rf is first rounded to 0.000231227.
        assert!((sr - 0.0768773).abs() < 2e-7, "{sr}");
        assert!((sr - 0.076_877_417_411_120_71).abs() < 1e-14, "{sr}");
        let doubled = sharpe_ratio(rf + 2.0 * (0.001 - rf), 0.02, &cfg).unwrap();
        assert!((doubled - sr).abs() < 1e-12);
        assert!(matches!(sharpe_ratio(0.001, 0.0, &cfg), Err(Error::UndefinedSharpe)));
    }

    #[test]
    fn default_grids() {
        let cfg = EvalConfig::default();
        assert_eq!(cfg.lambda_grid, vec![2.0, 2.5, 3.0, 3.5, 4.0]);
        assert_eq!(cfg.frontier_lambdas.len(), 60);
        assert!((cfg.frontier_lambdas[0] - 0.05).abs() < 1e-15);
        assert_eq!(*cfg.frontier_lambdas.last().unwrap(), 200.0);
        assert!(cfg.frontier_lambdas.windows(2).all(|w| w[1] > w[0]));
        assert!(cfg.validate().is_ok());
        assert!(EvalConfig {
            rf_annual: 1.0,
            ..EvalConfig::default()
        }
        .validate()
        .is_err());
        assert!(EvalConfig {
            lambda_grid: vec![2.0, -1.0],
            ..EvalConfig::default()
        }
        .validate()
        .is_err());
    }
}
