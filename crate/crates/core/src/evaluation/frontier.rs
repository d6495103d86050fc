use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::model_for;
use super::stats::{portfolio_stats, EvalConfig};
use crate::estimation::{Calibration, MomentEstimates};
use crate::optimizer::{solve, ModelKind, ModelSpec, SolverConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub lambda: f64,
    /// Per-period standard deviation under the point estimates.
    pub risk: f64,
    /// Per-period expected return under the point estimates.
    pub ret: f64,
    pub weights: Vec<f64>,
}

/// One point per `config.frontier_lambdas` entry, in the same (ascending)
/// order, so risk decreases along the list.
pub fn efficient_frontier(
    kind: ModelKind,
    calibration: &Calibration,
    eval: &MomentEstimates,
    config: &EvalConfig,
) -> Result<Vec<FrontierPoint>> {
    config.validate()?;
    let mut lambdas = config.frontier_lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    let run = |&lambda: &f64| -> Result<FrontierPoint> {
        let model = model_for(kind, calibration, lambda);
        let sol =
            solve(&model, &config.solver).map_err(|e| e.context(format!("{kind} frontier at lambda = {lambda}")))?;
        if !sol.converged {
            return Err(Error::NotConverged {
                model: kind.to_string(),
                lambda,
                kkt_residual: sol.kkt_residual,
            });
        }
        let (ret, risk) = portfolio_stats(&sol.weights_vector(), eval)?;
        Ok(FrontierPoint {
            lambda,
            risk,
            ret,
            weights: sol.weights,
        })
    };
    if config.parallel {
        lambdas.par_iter().map(run).collect()
    } else {
        lambdas.iter().map(run).collect()
    }
}

/// `model,lambda,risk,return` rows.
pub fn frontier_to_csv(curves: &[(ModelKind, Vec<FrontierPoint>)]) -> String {
    let mut out = String::from("model,lambda,risk,return\n");
    for (kind, points) in curves {
        for p in points {
            let _ = writeln!(out, "{kind},{},{},{}", p.lambda, p.risk, p.ret);
        }
    }
    out
}

/// Risk and return both non-increasing along increasing lambda, up to
/// `slack`.
pub fn is_monotone_in_lambda(points: &[FrontierPoint], slack: f64) -> bool {
    let mut sorted: Vec<&FrontierPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    sorted
        .windows(2)
        .all(|w| w[1].risk <= w[0].risk + slack && w[1].ret <= w[0].ret + slack)
}

const LAMBDA_MIN: f64 = 1e-8;
const LAMBDA_MAX: f64 = 1e12;

fn mark_point(eval: &MomentEstimates, lambda: f64, solver: &SolverConfig) -> Result<(f64, f64)> {
    let model = ModelSpec::mark(eval.mu_hat.clone(), eval.sigma_hat.clone(), lambda);
    let sol = solve(&model, solver)?;
    portfolio_stats(&sol.weights_vector(), eval)
}

/// Highest nominal return the Mark frontier reaches at portfolio risk
/// `risk`.
///
/// Mark risk is non-increasing in lambda, so the lambda whose risk matches
/// is bracketed by bisection in log-lambda and the return is interpolated
/// linearly between the two bracketing Mark portfolios. Refining the bracket
/// until it is tight keeps the chord error far below what a fixed grid
/// gives on the concave frontier. Risks beyond the `lambda -> 0` end get the
/// top-return portfolio; risks below the `lambda -> inf` end get its return.
pub fn mark_return_at_risk(eval: &MomentEstimates, risk: f64, solver: &SolverConfig) -> Result<f64> {
    let (mut lo, mut hi) = (LAMBDA_MIN.ln(), LAMBDA_MAX.ln());
    let (mut ret_lo, mut risk_lo) = mark_point(eval, LAMBDA_MIN, solver)?;
    if risk >= risk_lo {
        return Ok(ret_lo);
    }
    let (mut ret_hi, mut risk_hi) = mark_point(eval, LAMBDA_MAX, solver)?;
    if risk <= risk_hi {
        return Ok(ret_hi);
    }
    for _ in 0..200 {
        if risk_lo - risk_hi <= 1e-14 * risk_lo.max(1e-300) || hi - lo < 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (ret_mid, risk_mid) = mark_point(eval, mid.exp(), solver)?;
        if risk_mid >= risk {
            lo = mid;
            ret_lo = ret_mid;
            risk_lo = risk_mid;
        } else {
            hi = mid;
            ret_hi = ret_mid;
            risk_hi = risk_mid;
        }
    }
    if risk_lo - risk_hi <= 0.0 {
        return Ok(ret_lo.max(ret_hi));
    }
    let w = (risk - risk_hi) / (risk_lo - risk_hi);
    Ok(ret_hi + w * (ret_lo - ret_hi))
}

/// Largest `ret - mark_return_at_risk(risk)` over the points; a value
/// `<= tol` means every point lies on or below the Mark frontier.
pub fn frontier_dominance_violation(
    points: &[FrontierPoint],
    eval: &MomentEstimates,
    solver: &SolverConfig,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for p in points {
        let bound = mark_return_at_risk(eval, p.risk, solver)?;
        worst = worst.max(p.ret - bound);
    }
    Ok(worst)
}
