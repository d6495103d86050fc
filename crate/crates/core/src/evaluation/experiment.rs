use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::frontier::{efficient_frontier, frontier_to_csv, FrontierPoint};
use super::stats::EvalConfig;
use super::sweep::{lambda_sweep, SweepReport};
use crate::estimation::{calibrate_all, estimate_moments, BootstrapOptions, Calibration, MomentEstimates};
use crate::market_data::{simulate_returns, ReturnMatrix, SimulationConfig};
use crate::optimizer::{ModelKind, ModelSpec};
use crate::rng::{derive_seed, Purpose};
use crate::Result;

/// The model of `kind` at risk aversion `lambda` built from a calibration.
pub fn model_for(kind: ModelKind, calibration: &Calibration, lambda: f64) -> ModelSpec {
    let m = &calibration.moments;
    match kind {
        ModelKind::Mark => ModelSpec::mark(m.mu_hat.clone(), m.sigma_hat.clone(), lambda),
        ModelKind::Box => ModelSpec::box_model(m.mu_hat.clone(), m.sigma_hat.clone(), lambda, &calibration.box_set),
        ModelKind::Ellip => ModelSpec::ellip(m.mu_hat.clone(), m.sigma_hat.clone(), lambda, &calibration.ellipsoid),
        ModelKind::Sep => ModelSpec::sep(&calibration.separable, lambda),
    }
}

#[derive(Debug, Clone)]
pub enum Dataset {
    Returns(ReturnMatrix),
    Simulated(SimulationConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub report: SweepReport,
    pub frontiers: Vec<(ModelKind, Vec<FrontierPoint>)>,
    pub calibration: Calibration,
}

/// Materializes the dataset, splits it if `config.test_fraction` is set, and
/// calibrates all sets on the training rows. Returns the calibration and the
/// moments used for evaluation (the calibration moments when in-sample).
pub fn calibrate_dataset(dataset: &Dataset, config: &EvalConfig) -> Result<(Calibration, MomentEstimates)> {
    config.validate()?;
    let returns = match dataset {
        Dataset::Returns(r) => r.clone(),
        Dataset::Simulated(sim) => simulate_returns(sim)?,
    };
    let (train, test) = match config.test_fraction {
        None => (returns, None),
        Some(f) => {
            let n = returns.n_obs();
            let n_test = ((n as f64) * f).round() as usize;
            let n_train = n.saturating_sub(n_test);
            if n_test < 2 || n_train < 2 {
                return Err(crate::Error::InsufficientData(format!(
                    "cannot split {n} observations with test fraction {f}"
                )));
            }
            (
                returns.slice_rows(0, n_train)?,
                Some(returns.slice_rows(n_train, n_test)?),
            )
        }
    };

    let options = BootstrapOptions {
        parallel: config.parallel,
        ..BootstrapOptions::default()
    };
    let bootstrap_seed = derive_seed(config.seed, Purpose::Bootstrap);
    let calibration = calibrate_all(&train, config.alpha, config.beta, bootstrap_seed, options)?;
    let eval = match &test {
        Some(t) => estimate_moments(t)?,
        None => calibration.moments.clone(),
    };
    Ok((calibration, eval))
}

/// Calibrates every set on the dataset, sweeps the lambda grid and traces
/// all four frontiers. The bootstrap seed is derived from `config.seed`.
pub fn run_experiment(dataset: &Dataset, config: &EvalConfig, label: &str) -> Result<ExperimentOutput> {
    let (calibration, eval) = calibrate_dataset(dataset, config)?;
    let mut report = lambda_sweep(&eval, &calibration, config)?;
    report.metadata.label = label.to_string();
    let frontiers = ModelKind::ALL
        .into_iter()
        .map(|kind| efficient_frontier(kind, &calibration, &eval, config).map(|f| (kind, f)))
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentOutput {
        report,
        frontiers,
        calibration,
    })
}

impl ExperimentOutput {
    /// Writes `report.csv`, `report.json`, `frontier_<model>.csv` (one per
    /// model), `calibration.json` and `metadata.json` into `dir`.
    pub fn write_artifacts(&self, dir: &Path, extra_metadata: &serde_json::Value) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.csv"), self.report.to_csv())?;
        fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&self.report)? + "\n",
        )?;
        for (kind, points) in &self.frontiers {
            let name = format!("frontier_{}.csv", kind.as_str().to_ascii_lowercase());
            fs::write(dir.join(name), frontier_to_csv(&[(*kind, points.clone())]))?;
        }
        fs::write(
            dir.join("calibration.json"),
            serde_json::to_string_pretty(&self.calibration)? + "\n",
        )?;
        let metadata = serde_json::json!({
            "report": self.report.metadata,
            "run": extra_metadata,
        });
        fs::write(
            dir.join("metadata.json"),
            serde_json::to_string_pretty(&metadata)? + "\n",
        )?;
        Ok(())
    }
}
