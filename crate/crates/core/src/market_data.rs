//! Price ingestion, log returns, and seeded multivariate-normal simulation.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, serde_rowmajor};
use crate::rng;
use crate::{Error, Result};

/// Adjusted closing prices, one row per trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// `n_days x N`.
    pub prices: DMatrix<f64>,
}

impl PriceTable {
    pub fn n_days(&self) -> usize {
        self.prices.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.prices.ncols()
    }
}

/// Per-period log returns, `n x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    pub tickers: Vec<String>,
    /// Row labels. Dates for ingested data, period indices for simulated data.
    pub periods: Vec<String>,
    pub returns: DMatrix<f64>,
}

impl ReturnMatrix {
    pub fn new(tickers: Vec<String>, periods: Vec<String>, returns: DMatrix<f64>) -> Result<Self> {
        if tickers.len() != returns.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} tickers for {} return columns",
                tickers.len(),
                returns.ncols()
            )));
        }
        if periods.len() != returns.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} period labels for {} return rows",
                periods.len(),
                returns.nrows()
            )));
        }
        if returns.nrows() == 0 || returns.ncols() == 0 {
            return Err(Error::InsufficientData("empty return matrix".into()));
        }
        if let Some(pos) = returns.iter().position(|v| !v.is_finite()) {
            let (col, row) = (pos / returns.nrows(), pos % returns.nrows());
            return Err(Error::InvalidArgument(format!(
                "non-finite return at row {row}, column {}",
                tickers[col]
            )));
        }
        Ok(Self {
            tickers,
            periods,
            returns,
        })
    }

    /// Observation count (the `n` of the estimators).
    pub fn n_obs(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }

    /// Rows `range` as a new matrix.
    pub fn slice_rows(&self, start: usize, len: usize) -> Result<Self> {
        Self::new(
            self.tickers.clone(),
            self.periods[start..start + len].to_vec(),
            self.returns.rows(start, len).into_owned(),
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Fill an empty cell with the previous row's price in the same column.
    pub forward_fill: bool,
}

fn parse_err(row: usize, column: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column: column.into(),
        message: message.into(),
    }
}

struct RawTable {
    header: Vec<String>,
    /// (line number, first cell, remaining cells)
    rows: Vec<(usize, String, Vec<String>)>,
}

fn read_raw(csv_text: &str) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec?.iter().map(str::to_owned).collect::<Vec<_>>(),
        None => return Err(parse_err(1, "-", "empty input")),
    };
    if header.len() < 2 {
        return Err(parse_err(1, "-", "header needs a date column and at least one ticker"));
    }
    for (j, name) in header.iter().enumerate().skip(1) {
        if name.is_empty() {
            return Err(parse_err(1, format!("#{}", j + 1), "empty ticker name"));
        }
        if header[1..j].contains(name) {
            return Err(parse_err(1, name.clone(), "duplicate ticker"));
        }
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                "-",
                format!("ragged row: {} cells, header has {}", rec.len(), header.len()),
            ));
        }
        let mut cells = rec.iter().map(str::to_owned);
        let first = cells.next().unwrap_or_default();
        rows.push((line, first, cells.collect()));
    }
    Ok(RawTable { header, rows })
}

pub fn parse_price_table(csv_text: &str) -> Result<PriceTable> {
    parse_price_table_with(csv_text, ParseOptions::default())
}

/// Parses `date,<ticker1>,...,<tickerN>` with ISO-8601 dates. Rows are
/// sorted ascending by date.
pub fn parse_price_table_with(csv_text: &str, options: ParseOptions) -> Result<PriceTable> {
    let raw = read_raw(csv_text)?;
    let tickers: Vec<String> = raw.header[1..].to_vec();
    let n_assets = tickers.len();

    let mut rows: Vec<(NaiveDate, usize, Vec<Option<f64>>)> = Vec::with_capacity(raw.rows.len());
    for (line, date_cell, cells) in &raw.rows {
        let date = NaiveDate::parse_from_str(date_cell, "%Y-%m-%d")
            .map_err(|e| parse_err(*line, raw.header[0].clone(), format!("bad date {date_cell:?}: {e}")))?;
        let mut values = Vec::with_capacity(n_assets);
        for (j, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                values.push(None);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(*line, tickers[j].clone(), format!("malformed number {cell:?}")))?;
            if !v.is_finite() || v <= 0.0 {
                return Err(parse_err(
                    *line,
                    tickers[j].clone(),
                    format!("price must be positive, got {cell}"),
                ));
            }
            values.push(Some(v));
        }
        rows.push((date, *line, values));
    }

    rows.sort_by_key(|(date, _, _)| *date);
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(parse_err(
                pair[1].1,
                raw.header[0].clone(),
                format!("duplicate date {}", pair[1].0),
            ));
        }
    }

    let n_days = rows.len();
    let mut prices = DMatrix::zeros(n_days, n_assets);
    for (t, (_, line, values)) in rows.iter().enumerate() {
        for (j, v) in values.iter().enumerate() {
            prices[(t, j)] = match v {
                Some(v) => *v,
                None if options.forward_fill && t > 0 => prices[(t - 1, j)],
                None => return Err(parse_err(*line, tickers[j].clone(), "missing price")),
            };
        }
    }

    Ok(PriceTable {
        dates: rows.into_iter().map(|(d, _, _)| d).collect(),
        tickers,
        prices,
    })
}

/// `returns[t][i] = ln(prices[t+1][i] / prices[t][i])`; each row is labelled
/// with the later date of its pair.
pub fn compute_log_returns(prices: &PriceTable) -> Result<ReturnMatrix> {
    let n_days = prices.n_days();
    if n_days < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 price rows for log returns, got {n_days}"
        )));
    }
    let p = &prices.prices;
    let returns = DMatrix::from_fn(n_days - 1, prices.n_assets(), |t, i| (p[(t + 1, i)] / p[(t, i)]).ln());
    let periods = prices.dates[1..].iter().map(|d| d.to_string()).collect();
    ReturnMatrix::new(prices.tickers.clone(), periods, returns)
}

/// Reads a returns file in the layout written by [`write_returns_csv`]. The
/// first column is an arbitrary unique row label.
pub fn parse_returns_csv(csv_text: &str) -> Result<ReturnMatrix> {
    let raw = read_raw(csv_text)?;
    let tickers: Vec<String> = raw.header[1..].to_vec();
    let mut periods = Vec::with_capacity(raw.rows.len());
    let mut data = Vec::with_capacity(raw.rows.len() * tickers.len());
    for (line, label, cells) in &raw.rows {
        if periods.contains(label) {
            return Err(parse_err(
                *line,
                raw.header[0].clone(),
                format!("duplicate period label {label:?}"),
            ));
        }
        periods.push(label.clone());
        for (j, cell) in cells.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(*line, tickers[j].clone(), format!("malformed return {cell:?}")))?;
            data.push(v);
        }
    }
    if periods.is_empty() {
        return Err(Error::InsufficientData("returns file has no data rows".into()));
    }
    let returns = DMatrix::from_row_slice(periods.len(), tickers.len(), &data);
    ReturnMatrix::new(tickers, periods, returns)
}

pub fn write_returns_csv(returns: &ReturnMatrix, first_column: &str) -> String {
    let mut out = String::new();
    out.push_str(first_column);
    for t in &returns.tickers {
        out.push(',');
        out.push_str(t);
    }
    out.push('\n');
    for (t, label) in returns.periods.iter().enumerate() {
        out.push_str(label);
        for v in returns.returns.row(t).iter() {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub const DEFAULT_JITTER: f64 = 1e-10;

/// Parameters of a multivariate-normal return simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(with = "serde_rowmajor::vector")]
    pub mean: DVector<f64>,
    #[serde(with = "serde_rowmajor::matrix")]
    pub covariance: DMatrix<f64>,
    pub sample_count: usize,
    pub seed: u64,
    /// Relative diagonal jitter (times the largest variance), only used when
    /// plain Cholesky fails.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    /// Column names; `A1..AN` when empty.
    #[serde(default)]
    pub tickers: Vec<String>,
}

fn default_jitter() -> f64 {
    DEFAULT_JITTER
}

impl SimulationConfig {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, sample_count: usize, seed: u64) -> Self {
        Self {
            mean,
            covariance,
            sample_count,
            seed,
            jitter: DEFAULT_JITTER,
            tickers: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.mean.len();
        if n == 0 {
            return Err(Error::InvalidArgument("simulation mean is empty".into()));
        }
        if self.covariance.nrows() != n || self.covariance.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "mean has {n} entries but covariance is {}x{}",
                self.covariance.nrows(),
                self.covariance.ncols()
            )));
        }
        if self.sample_count == 0 {
            return Err(Error::InvalidArgument("sample_count must be at least 1".into()));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "jitter must be >= 0, got {}",
                self.jitter
            )));
        }
        if !self.tickers.is_empty() && self.tickers.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} tickers for {n} assets",
                self.tickers.len()
            )));
        }
        Ok(())
    }
}

/// Draws `sample_count` i.i.d. rows from `N(mean, covariance)` as
/// `mean + L z` with `L` the lower Cholesky factor.
pub fn simulate_returns(config: &SimulationConfig) -> Result<ReturnMatrix> {
    config.validate()?;
    let (factor, _) = linalg::lower_factor(&config.covariance, config.jitter)?;
    let n_assets = config.mean.len();
    let mut rng = rng::stream_rng(config.seed, 0);
    let mut returns = DMatrix::zeros(config.sample_count, n_assets);
    let mut z = DVector::zeros(n_assets);
    for t in 0..config.sample_count {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let row = &config.mean + &factor * &z;
        returns.row_mut(t).copy_from(&row.transpose());
    }
    let tickers = if config.tickers.is_empty() {
        (1..=n_assets).map(|i| format!("A{i}")).collect()
    } else {
        config.tickers.clone()
    };
    let periods = (1..=config.sample_count).map(|t| t.to_string()).collect();
    ReturnMatrix::new(tickers, periods, returns)
}
