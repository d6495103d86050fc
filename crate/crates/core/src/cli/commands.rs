use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::RunConfig;
use crate::evaluation::{
    calibrate_dataset, efficient_frontier, frontier_to_csv, run_experiment, summarize_max_avg_sharpe, Dataset,
    ExperimentOutput, FrontierPoint, SharpeSummary, SweepReport,
};
use crate::market_data::{
    compute_log_returns, parse_price_table_with, parse_returns_csv, simulate_returns, write_returns_csv, ParseOptions,
};
use crate::optimizer::ModelKind;
use crate::rng::{derive_seed, Purpose, RNG_ALGORITHM};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Input is already a returns file; re-emit it unchanged in canonical form.
    pub passthrough: bool,
    pub forward_fill: bool,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents).map_err(|e| Error::from(e).context(format!("writing {}", path.display())))
}

/// Converts a price CSV to a log-return CSV (`date,<tickers>` minus the first
/// date). Writes to `out` when given and returns the text.
pub fn cmd_ingest(input: &Path, options: IngestOptions, out: Option<&Path>) -> Result<String> {
    let text = read(input)?;
    let returns = if options.passthrough {
        parse_returns_csv(&text)
    } else {
        parse_price_table_with(
            &text,
            ParseOptions {
                forward_fill: options.forward_fill,
            },
        )
        .and_then(|t| compute_log_returns(&t))
    }
    .map_err(|e| e.context(input.display().to_string()))?;
    let first = text.split([',', '\n']).next().unwrap_or("date").trim();
    let csv = write_returns_csv(&returns, if first.is_empty() { "date" } else { first });
    if let Some(path) = out {
        write(path, &csv)?;
    }
    Ok(csv)
}

fn run_metadata(config: &RunConfig) -> serde_json::Value {
    json!({
        "config": config.to_file(),
        "simulation_seed": derive_seed(config.eval.seed, Purpose::Simulation),
        "bootstrap_seed": derive_seed(config.eval.seed, Purpose::Bootstrap),
        "rng": RNG_ALGORITHM,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn label_of(config: &RunConfig, default: String) -> String {
    config.label.clone().unwrap_or(default)
}

/// Writes the simulated sample to `<out>/returns.csv` with the settings in
/// `<out>/simulation.json`.
pub fn cmd_simulate(config: &RunConfig) -> Result<PathBuf> {
    let (dataset, _) = config.dataset()?;
    let Dataset::Simulated(sim) = dataset else {
        return Err(Error::InvalidArgument(
            "simulate needs a simulation block or --samples with a file source".into(),
        ));
    };
    let returns = simulate_returns(&sim)?;
    let path = config.out.join("returns.csv");
    write(&path, &write_returns_csv(&returns, "period"))?;
    let meta = json!({ "simulation": sim, "run": run_metadata(config) });
    write(
        &config.out.join("simulation.json"),
        &(serde_json::to_string_pretty(&meta)? + "\n"),
    )?;
    Ok(path)
}

/// Full comparison: report CSV/JSON, four frontier CSVs, calibration and
/// metadata under `config.out`.
pub fn cmd_compare(config: &RunConfig) -> Result<ExperimentOutput> {
    let (dataset, default_label) = config.dataset()?;
    let output = run_experiment(&dataset, &config.eval, &label_of(config, default_label))?;
    output.write_artifacts(&config.out, &run_metadata(config))?;
    write(
        &config.out.join("config.json"),
        &(serde_json::to_string_pretty(&config.to_file())? + "\n"),
    )?;
    Ok(output)
}

/// Frontier of one model written to `<out>/frontier_<model>.csv`.
pub fn cmd_frontier(config: &RunConfig, model: ModelKind) -> Result<Vec<FrontierPoint>> {
    let (dataset, _) = config.dataset()?;
    let (calibration, eval) = calibrate_dataset(&dataset, &config.eval)?;
    let points = efficient_frontier(model, &calibration, &eval, &config.eval)?;
    let name = format!("frontier_{}.csv", model.as_str().to_ascii_lowercase());
    write(&config.out.join(name), &frontier_to_csv(&[(model, points.clone())]))?;
    Ok(points)
}

/// Max-average-Sharpe table over saved `report.json` files. Labels come from
/// each report's metadata unless given as `label=path`.
pub fn cmd_summary(reports: &[String], out: Option<&Path>) -> Result<SharpeSummary> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("summary needs at least one report".into()));
    }
    let mut loaded = Vec::with_capacity(reports.len());
    for arg in reports {
        let (label, path) = match arg.split_once('=') {
            Some((l, p)) if !Path::new(arg).exists() => (Some(l.to_string()), PathBuf::from(p)),
            _ => (None, PathBuf::from(arg)),
        };
        let mut report: SweepReport = serde_json::from_str(&read(&path)?)
            .map_err(|e| Error::from(e).context(format!("parsing {}", path.display())))?;
        if let Some(l) = label {
            report.metadata.label = l;
        }
        loaded.push(report);
    }
    let summary = summarize_max_avg_sharpe(&loaded);
    if let Some(dir) = out {
        write(&dir.join("summary.csv"), &summary.to_csv())?;
        write(
            &dir.join("summary.json"),
            &(serde_json::to_string_pretty(&summary)? + "\n"),
        )?;
    }
    Ok(summary)
}
