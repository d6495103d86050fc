//! Long-only portfolio optimization under parameter uncertainty.
//!
//! The crate implements the classical mean-variance (Markowitz) model and
//! three worst-case robust variants whose inner minimization has a closed
//! form on the long-only simplex:
//!
//! * **Box**: per-asset intervals on the expected return, calibrated from
//!   normal quantiles.
//! * **Ellip**: an ellipsoid around the estimated mean, radius from a
//!   chi-square quantile.
//! * **Sep**: separable interval bounds on both mean and covariance,
//!   calibrated by a nonparametric bootstrap.
//!
//! Modules follow the data flow of an experiment: [`market_data`] ingests or
//! simulates returns, [`estimation`] computes moments and uncertainty sets,
//! [`optimizer`] solves each model on the simplex, [`evaluation`] sweeps the
//! risk-aversion grid and traces frontiers, and [`cli`] wires everything to
//! files on disk.

pub mod cli;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod linalg;
pub mod market_data;
pub mod optimizer;
pub mod rng;

pub use error::{Error, Result};
