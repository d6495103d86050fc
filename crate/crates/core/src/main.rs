use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use robust_portfolio::cli::{
    cmd_compare, cmd_frontier, cmd_ingest, cmd_simulate, cmd_summary, DataSource, IngestOptions, RunConfig,
    RunConfigFile, SampleCount,
};
use robust_portfolio::optimizer::ModelKind;
use robust_portfolio::Error;

#[derive(Parser)]
#[command(
    name = "robustfolio",
    version,
    about = "Markowitz vs. worst-case robust portfolio comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert adjusted closing prices to daily log returns.
    Ingest {
        #[arg(long)]
        csv: PathBuf,
        /// Input is already a returns file.
        #[arg(long)]
        returns: bool,
        #[arg(long)]
        forward_fill: bool,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a multivariate-normal sample.
    Simulate(RunArgs),
    /// Run all four models over the risk-aversion grid and trace frontiers.
    Compare(RunArgs),
    /// Trace the efficient frontier of one model.
    Frontier {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        model: ModelArg,
    },
    /// Maximum average Sharpe ratio per saved report (`[label=]report.json`).
    Summary {
        #[arg(required = true)]
        reports: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Price CSV (`date,<tickers>`).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Treat --csv as a returns file.
    #[arg(long)]
    returns: bool,
    /// Simulate this many samples (or `same`) from the data's moments.
    #[arg(long)]
    samples: Option<SampleCount>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<usize>,
    /// Comma-separated risk aversions.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long)]
    rf_annual: Option<f64>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    forward_fill: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Mark,
    Box,
    Ellip,
    Sep,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Mark => ModelKind::Mark,
            ModelArg::Box => ModelKind::Box,
            ModelArg::Ellip => ModelKind::Ellip,
            ModelArg::Sep => ModelKind::Sep,
        }
    }
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

fn resolve(args: RunArgs) -> Result<RunConfig, Failure> {
    let file = match &args.config {
        Some(path) => RunConfigFile::load(path).map_err(|e| Failure::Usage(e.to_string()))?,
        None => RunConfigFile::default(),
    };
    let data = args.csv.map(|p| {
        if args.returns {
            DataSource::ReturnsCsv(p)
        } else {
            DataSource::PricesCsv(p)
        }
    });
    let flags = RunConfigFile {
        data,
        samples: args.samples,
        label: args.label,
        alpha: args.alpha,
        beta: args.beta,
        lambda_grid: args.lambda_grid,
        rf_annual: args.rf_annual,
        seed: args.seed,
        forward_fill: args.forward_fill.then_some(true),
        out: args.out,
        ..RunConfigFile::default()
    };
    RunConfig::resolve(file.overlay(flags)).map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest {
            csv,
            returns,
            forward_fill,
            out,
        } => {
            let options = IngestOptions {
                passthrough: returns,
                forward_fill,
            };
            let text = cmd_ingest(&csv, options, out.as_deref())?;
            if out.is_none() {
                print!("{text}");
            }
        }
        Command::Simulate(args) => {
            let path = cmd_simulate(&resolve(args)?)?;
            println!("wrote {}", path.display());
        }
        Command::Compare(args) => {
            let config = resolve(args)?;
            let output = cmd_compare(&config)?;
            print!("{}", output.report.to_csv());
            println!("artifacts in {}", config.out.display());
        }
        Command::Frontier { run, model } => {
            let config = resolve(run)?;
            let points = cmd_frontier(&config, model.into())?;
            println!("{} frontier points in {}", points.len(), config.out.display());
        }
        Command::Summary { reports, out } => {
            let summary = cmd_summary(&reports, out.as_deref())?;
            print!("{}", summary.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
