use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::model_for;
use super::stats::{portfolio_stats, rf_per_period, sharpe_ratio, EvalConfig};
use crate::estimation::{Calibration, MomentEstimates};
use crate::optimizer::{solve, ModelKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub label: String,
    pub n_assets: usize,
    pub n_obs: usize,
    pub alpha: f64,
    pub beta: usize,
    pub seed: u64,
    pub rf_annual: f64,
    pub periods_per_year: f64,
    pub rf_period: f64,
    pub rf_convention: String,
    pub sharpe_convention: String,
    pub sigma_mu_convention: String,
    pub covariance_convention: String,
    pub evaluation: String,
    pub rng: String,
    pub models: Vec<ModelKind>,
    pub version: String,
}

/// One solved `(lambda, model)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub lambda: f64,
    pub model: ModelKind,
    pub ret: f64,
    pub risk: f64,
    pub sharpe: f64,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub weights: Vec<f64>,
}

/// Sharpe ratios in [`ModelKind::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub sharpe: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub average: [f64; 4],
    pub metadata: ReportMetadata,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    /// `lambda,SR_Mark,SR_Box,SR_Ellip,SR_Sep` rows plus a final `Avg` row,
    /// three decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda");
        for kind in ModelKind::ALL {
            let _ = write!(out, ",SR_{kind}");
        }
        out.push('\n');
        let mut line = |label: String, values: &[f64; 4]| {
            out.push_str(&label);
            for v in values {
                let _ = write!(out, ",{v:.3}");
            }
            out.push('\n');
        };
        for row in &self.rows {
            line(row.lambda.to_string(), &row.sharpe);
        }
        line("Avg".to_string(), &self.average);
        out
    }

    pub fn average_of(&self, kind: ModelKind) -> f64 {
        self.average[kind_index(kind)]
    }
}

pub(crate) fn kind_index(kind: ModelKind) -> usize {
    ModelKind::ALL.iter().position(|k| *k == kind).unwrap_or(0)
}

pub(crate) fn base_metadata(eval: &MomentEstimates, calibration: &Calibration, config: &EvalConfig) -> ReportMetadata {
    ReportMetadata {
        label: String::new(),
        n_assets: eval.n_assets(),
        n_obs: calibration.moments.n,
        alpha: calibration.alpha,
        beta: calibration.beta,
        seed: config.seed,
        rf_annual: config.rf_annual,
        periods_per_year: config.periods_per_year,
        rf_period: rf_per_period(config),
        rf_convention: super::RF_CONVENTION.to_string(),
        sharpe_convention: super::SHARPE_CONVENTION.to_string(),
        sigma_mu_convention: calibration.sigma_mu_convention.clone(),
        covariance_convention: crate::estimation::COVARIANCE_CONVENTION.to_string(),
        evaluation: match config.test_fraction {
            None => "in-sample".to_string(),
            Some(f) => format!("train/test split, trailing fraction {f} held out"),
        },
        rng: crate::rng::RNG_ALGORITHM.to_string(),
        models: ModelKind::ALL.to_vec(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Solves all four models at every grid lambda and scores each portfolio by
/// its Sharpe ratio under `eval` (the point estimates).
pub fn lambda_sweep(eval: &MomentEstimates, calibration: &Calibration, config: &EvalConfig) -> Result<SweepReport> {
    config.validate()?;
    if eval.n_assets() != calibration.moments.n_assets() {
        return Err(Error::DimensionMismatch(format!(
            "evaluation moments have {} assets, calibration has {}",
            eval.n_assets(),
            calibration.moments.n_assets()
        )));
    }
    let jobs: Vec<(f64, ModelKind)> = config
        .lambda_grid
        .iter()
        .flat_map(|&l| ModelKind::ALL.into_iter().map(move |k| (l, k)))
        .collect();
    let run = |&(lambda, kind): &(f64, ModelKind)| -> Result<SweepCell> {
        let model = model_for(kind, calibration, lambda);
        let sol = solve(&model, &config.solver).map_err(|e| e.context(format!("{kind} at lambda = {lambda}")))?;
        if !sol.converged {
            return Err(Error::NotConverged {
                model: kind.to_string(),
                lambda,
                kkt_residual: sol.kkt_residual,
            });
        }
        let (ret, risk) = portfolio_stats(&sol.weights_vector(), eval)?;
        let sharpe = sharpe_ratio(ret, risk, config).map_err(|e| e.context(format!("{kind} at lambda = {lambda}")))?;
        Ok(SweepCell {
            lambda,
            model: kind,
            ret,
            risk,
            sharpe,
            objective: sol.objective,
            kkt_residual: sol.kkt_residual,
            iterations: sol.iterations,
            weights: sol.weights,
        })
    };
    let cells: Vec<SweepCell> = if config.parallel {
        jobs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };

    let rows: Vec<SweepRow> = cells
        .chunks(ModelKind::ALL.len())
        .map(|chunk| {
            let mut sharpe = [0.0; 4];
            for c in chunk {
                sharpe[kind_index(c.model)] = c.sharpe;
            }
            SweepRow {
                lambda: chunk[0].lambda,
                sharpe,
            }
        })
        .collect();
    let mut average = [0.0; 4];
    for (j, avg) in average.iter_mut().enumerate() {
        *avg = rows.iter().map(|r| r.sharpe[j]).sum::<f64>() / rows.len() as f64;
    }

    Ok(SweepReport {
        rows,
        average,
        metadata: base_metadata(eval, calibration, config),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub best_model: ModelKind,
    pub max_avg_sharpe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpeSummary {
    pub rows: Vec<SummaryRow>,
}

impl SharpeSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,max_avg_sharpe,model\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.3},{}", r.label, r.max_avg_sharpe, r.best_model);
        }
        out
    }
}

/// Largest average-row Sharpe ratio of each report. Ties go to the model
/// listed first in [`ModelKind::ALL`].
pub fn summarize_max_avg_sharpe(reports: &[SweepReport]) -> SharpeSummary {
    let rows = reports
        .iter()
        .map(|r| {
            let (mut best, mut value) = (0, r.average[0]);
            for (j, v) in r.average.iter().enumerate().skip(1) {
                if *v > value {
                    best = j;
                    value = *v;
                }
            }
            SummaryRow {
                label: r.metadata.label.clone(),
                best_model: ModelKind::ALL[best],
                max_avg_sharpe: value,
            }
        })
        .collect();
    SharpeSummary { rows }
}
