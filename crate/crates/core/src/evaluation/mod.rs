//! Risk-aversion sweeps, Sharpe ratios, efficient frontiers and the
//! end-to-end comparison experiment.

mod experiment;
mod frontier;
mod stats;
mod sweep;

pub use experiment::{calibrate_dataset, model_for, run_experiment, Dataset, ExperimentOutput};
pub use frontier::{
    efficient_frontier, frontier_dominance_violation, frontier_to_csv, is_monotone_in_lambda, mark_return_at_risk,
    FrontierPoint,
};
pub use stats::{log_spaced, portfolio_stats, rf_per_period, sharpe_ratio, EvalConfig};
pub use sweep::{
    lambda_sweep, summarize_max_avg_sharpe, ReportMetadata, SharpeSummary, SummaryRow, SweepCell, SweepReport, SweepRow,
};

/// Recorded in every report.
pub const SHARPE_CONVENTION: &str =
    "per-period (not annualized): (mu_hat'x - rf_period) / sqrt(x' sigma_hat x), evaluated with point estimates";

pub const RF_CONVENTION: &str = "rf_period = ln(1 + rf_annual) / periods_per_year";
