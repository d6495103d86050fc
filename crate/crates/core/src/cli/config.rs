use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::estimation::estimate_moments;
use crate::evaluation::{Dataset, EvalConfig};
use crate::linalg::serde_rowmajor;
use crate::market_data::{
    compute_log_returns, parse_price_table_with, parse_returns_csv, ParseOptions, SimulationConfig, DEFAULT_JITTER,
};
use crate::optimizer::SolverConfig;
use crate::rng::{derive_seed, Purpose};
use crate::{Error, Result};

/// Number of simulated rows: a count, or `same` as the source data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleCount {
    Count(usize),
    Same(SameMarker),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SameMarker {
    Same,
}

impl FromStr for SampleCount {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("same") {
            return Ok(SampleCount::Same(SameMarker::Same));
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(SampleCount::Count(k)),
            _ => Err(format!("expected a positive integer or `same`, got {s:?}")),
        }
    }
}

impl fmt::Display for SampleCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleCount::Count(k) => write!(f, "{k}"),
            SampleCount::Same(_) => f.write_str("same"),
        }
    }
}

/// Ground-truth moments for a simulation arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    #[serde(with = "serde_rowmajor::vector")]
    pub mean: DVector<f64>,
    #[serde(with = "serde_rowmajor::matrix")]
    pub covariance: DMatrix<f64>,
    #[serde(default)]
    pub tickers: Vec<String>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub jitter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Adjusted closing prices; converted to log returns.
    PricesCsv(PathBuf),
    /// Log returns in the layout written by `ingest`.
    ReturnsCsv(PathBuf),
    Simulation(SimulationSpec),
}

/// The JSON config file. Every field is optional; command-line flags take
/// precedence, then file values, then defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub data: Option<DataSource>,
    pub samples: Option<SampleCount>,
    pub label: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<usize>,
    pub lambda_grid: Option<Vec<f64>>,
    pub frontier_lambdas: Option<Vec<f64>>,
    pub rf_annual: Option<f64>,
    pub periods_per_year: Option<f64>,
    pub seed: Option<u64>,
    pub solver: Option<SolverConfig>,
    pub test_fraction: Option<f64>,
    pub forward_fill: Option<bool>,
    pub parallel: Option<bool>,
    pub out: Option<PathBuf>,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::from(e).context(format!("parsing {}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: RunConfigFile) -> RunConfigFile {
        RunConfigFile {
            data: over.data.or(self.data),
            samples: over.samples.or(self.samples),
            label: over.label.or(self.label),
            alpha: over.alpha.or(self.alpha),
            beta: over.beta.or(self.beta),
            lambda_grid: over.lambda_grid.or(self.lambda_grid),
            frontier_lambdas: over.frontier_lambdas.or(self.frontier_lambdas),
            rf_annual: over.rf_annual.or(self.rf_annual),
            periods_per_year: over.periods_per_year.or(self.periods_per_year),
            seed: over.seed.or(self.seed),
            solver: over.solver.or(self.solver),
            test_fraction: over.test_fraction.or(self.test_fraction),
            forward_fill: over.forward_fill.or(self.forward_fill),
            parallel: over.parallel.or(self.parallel),
            out: over.out.or(self.out),
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataSource,
    pub samples: Option<SampleCount>,
    pub label: Option<String>,
    pub eval: EvalConfig,
    pub forward_fill: bool,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(file: RunConfigFile) -> Result<Self> {
        let data = file
            .data
            .ok_or_else(|| Error::InvalidArgument("no data source: pass --csv or a config with `data`".into()))?;
        let defaults = EvalConfig::default();
        let eval = EvalConfig {
            lambda_grid: file.lambda_grid.unwrap_or(defaults.lambda_grid),
            frontier_lambdas: file.frontier_lambdas.unwrap_or(defaults.frontier_lambdas),
            rf_annual: file.rf_annual.unwrap_or(defaults.rf_annual),
            periods_per_year: file.periods_per_year.unwrap_or(defaults.periods_per_year),
            alpha: file.alpha.unwrap_or(defaults.alpha),
            beta: file.beta.unwrap_or(defaults.beta),
            seed: file.seed.unwrap_or(defaults.seed),
            solver: file.solver.unwrap_or(defaults.solver),
            test_fraction: file.test_fraction,
            parallel: file.parallel.unwrap_or(defaults.parallel),
        };
        eval.validate()?;
        Ok(Self {
            data,
            samples: file.samples,
            label: file.label,
            eval,
            forward_fill: file.forward_fill.unwrap_or(false),
            out: file.out.unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// Back to the file layout with every field filled in, so a run can be
    /// repeated from its own metadata.
    pub fn to_file(&self) -> RunConfigFile {
        RunConfigFile {
            data: Some(self.data.clone()),
            samples: self.samples,
            label: self.label.clone(),
            alpha: Some(self.eval.alpha),
            beta: Some(self.eval.beta),
            lambda_grid: Some(self.eval.lambda_grid.clone()),
            frontier_lambdas: Some(self.eval.frontier_lambdas.clone()),
            rf_annual: Some(self.eval.rf_annual),
            periods_per_year: Some(self.eval.periods_per_year),
            seed: Some(self.eval.seed),
            solver: Some(self.eval.solver.clone()),
            test_fraction: self.eval.test_fraction,
            forward_fill: Some(self.forward_fill),
            parallel: Some(self.eval.parallel),
            out: Some(self.out.clone()),
        }
    }

    fn read(path: &Path) -> Result<String> {
        std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))
    }

    /// The dataset this run analyses, plus a default label.
    ///
    /// A file source with `samples` set becomes a simulation from the file's
    /// estimated moments. Simulations use the simulation seed derived from
    /// the top-level seed.
    pub fn dataset(&self) -> Result<(Dataset, String)> {
        let sim_seed = derive_seed(self.eval.seed, Purpose::Simulation);
        let (returns, source) = match &self.data {
            DataSource::PricesCsv(path) => {
                let table = parse_price_table_with(
                    &Self::read(path)?,
                    ParseOptions {
                        forward_fill: self.forward_fill,
                    },
                )
                .map_err(|e| e.context(path.display().to_string()))?;
                (compute_log_returns(&table)?, path.display().to_string())
            }
            DataSource::ReturnsCsv(path) => (
                parse_returns_csv(&Self::read(path)?).map_err(|e| e.context(path.display().to_string()))?,
                path.display().to_string(),
            ),
            DataSource::Simulation(spec) => {
                let samples = match (self.samples, spec.samples) {
                    (Some(SampleCount::Count(k)), _) => k,
                    (Some(SampleCount::Same(_)), _) => {
                        return Err(Error::InvalidArgument(
                            "`samples: same` needs a file data source to copy the count from".into(),
                        ))
                    }
                    (None, Some(k)) => k,
                    (None, None) => {
                        return Err(Error::InvalidArgument("simulation needs a sample count".into()));
                    }
                };
                let config = SimulationConfig {
                    mean: spec.mean.clone(),
                    covariance: spec.covariance.clone(),
                    sample_count: samples,
                    seed: sim_seed,
                    jitter: spec.jitter.unwrap_or(DEFAULT_JITTER),
                    tickers: spec.tickers.clone(),
                };
                let label = format!("simulated N={} samples={samples}", spec.mean.len());
                return Ok((Dataset::Simulated(config), label));
            }
        };

        match self.samples {
            None => {
                let label = format!("{source} N={} n={}", returns.n_assets(), returns.n_obs());
                Ok((Dataset::Returns(returns), label))
            }
            Some(count) => {
                let moments = estimate_moments(&returns)?;
                let samples = match count {
                    SampleCount::Count(k) => k,
                    SampleCount::Same(_) => returns.n_obs(),
                };
                let config = SimulationConfig {
                    mean: moments.mu_hat,
                    covariance: moments.sigma_hat,
                    sample_count: samples,
                    seed: sim_seed,
                    jitter: DEFAULT_JITTER,
                    tickers: returns.tickers.clone(),
                };
                let label = format!("simulated from {source} N={} samples={samples}", returns.n_assets());
                Ok((Dataset::Simulated(config), label))
            }
        }
    }
}
