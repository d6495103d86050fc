use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::{objective_subgradient, objective_value, ModelSpec, Objective};
use super::simplex::project_simplex;
use crate::{Error, Result};

/// Weights above this count as the support in the KKT check.
pub const ACTIVITY_THRESHOLD: f64 = 1e-9;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const MAX_POLISH_STEPS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// Projected-arc Armijo backtracking; each iteration first tries twice
    /// the last accepted step.
    Backtracking,
    /// `scale / sqrt(k)`, accepted only when the objective does not drop.
    /// `scale` defaults to `1 / ||g_0||`.
    Diminishing { scale: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StartPoint {
    Uniform,
    /// Projected onto the simplex before use.
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub step_rule: StepRule,
    pub start: StartPoint,
    /// Newton steps restricted to the current support after every gradient
    /// step.
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            tolerance: 1e-8,
            step_rule: StepRule::Backtracking,
            start: StartPoint::Uniform,
            polish: true,
        }
    }
}

impl SolverConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be >= 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if let StartPoint::Given(x) = &self.start {
            if x.len() != n || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "start vector must be finite with one entry per asset".into(),
                ));
            }
        }
        if let StepRule::Diminishing { scale: Some(c) } = self.step_rule {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::InvalidArgument("diminishing step scale must be > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSolution {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl PortfolioSolution {
    pub fn weights_vector(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.weights)
    }
}

/// Residual from a gradient `g` at feasible `x`: with `nu` the largest
/// gradient entry on the support, the larger of `max_i (g_i - nu)^+` and
/// `max_support |g_i - nu|`.
fn kkt_from_gradient(g: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let mut nu = f64::NEG_INFINITY;
    let mut support_min = f64::INFINITY;
    for i in 0..x.len() {
        if x[i] > ACTIVITY_THRESHOLD {
            nu = nu.max(g[i]);
            support_min = support_min.min(g[i]);
        }
    }
    if nu == f64::NEG_INFINITY {
        // cannot happen on the simplex for N * threshold < 1
        let i = x.imax();
        nu = g[i];
        support_min = g[i];
    }
    let above = g.iter().fold(0.0_f64, |acc, gi| acc.max(gi - nu));
    above.max(nu - support_min)
}

/// First-order optimality residual; zero at a maximizer.
pub fn kkt_residual(model: &ModelSpec, x: &DVector<f64>) -> Result<f64> {
    let g = objective_subgradient(model, x)?;
    Ok(kkt_from_gradient(&g, x))
}

fn numeric_failure(message: &str, x: &DVector<f64>) -> Error {
    Error::NumericFailure {
        message: message.into(),
        last_iterate: x.iter().copied().collect(),
    }
}

/// Clears negatives and rescales so the entries sum to one.
fn renormalize(mut x: DVector<f64>) -> DVector<f64> {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s = x.sum();
    if (s - 1.0).abs() > 0.0 && s > 0.0 {
        x /= s;
    }
    x
}

struct State<'a> {
    objective: &'a Objective,
    x: DVector<f64>,
    f: f64,
    trace: Vec<f64>,
}

impl State<'_> {
    fn accept(&mut self, x: DVector<f64>, f: f64) {
        self.x = x;
        self.f = f;
        self.trace.push(f);
    }

    fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        let f = self.objective.value(x);
        if f.is_finite() {
            Ok(f)
        } else {
            Err(numeric_failure("non-finite objective", x))
        }
    }

    /// Newton step for the objective restricted to the current support and
    /// the affine constraint, truncated at the first coordinate that hits
    /// zero. Returns whether the objective improved.
    fn polish_step(&mut self) -> Result<bool> {
        let support: Vec<usize> = (0..self.x.len()).filter(|&i| self.x[i] > 0.0).collect();
        let m = support.len();
        if m < 2 {
            return Ok(false);
        }
        let g = self.objective.gradient(&self.x);
        let h = self.objective.hessian(&self.x);

        let mut kkt = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[(a, b)] = h[(i, j)];
            }
            kkt[(a, m)] = 1.0;
            kkt[(m, a)] = 1.0;
            rhs[a] = -g[i];
        }
        let sol = match kkt.clone().lu().solve(&rhs) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => match kkt.svd(true, true).solve(&rhs, 1e-14) {
                Ok(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => return Ok(false),
            },
        };

        let mut d = DVector::zeros(self.x.len());
        for (a, &i) in support.iter().enumerate() {
            d[i] = sol[a];
        }
        // keep the direction in the tangent space exactly
        let drift = d.sum() / m as f64;
        for &i in &support {
            d[i] -= drift;
        }
        let slope = g.dot(&d);
        if slope.is_nan() || slope <= 0.0 {
            return Ok(false);
        }

        let mut t_max = f64::INFINITY;
        let mut blocking = None;
        for &i in &support {
            if d[i] < 0.0 {
                let t = self.x[i] / -d[i];
                if t < t_max {
                    t_max = t;
                    blocking = Some(i);
                }
            }
        }
        let mut t = t_max.min(1.0);
        for _ in 0..MAX_BACKTRACKS {
            let mut y = &self.x + &d * t;
            if t == t_max {
                if let Some(i) = blocking {
                    y[i] = 0.0;
                }
            }
            let y = renormalize(y);
            let fy = self.eval(&y)?;
            if fy > self.f {
                self.accept(y, fy);
                return Ok(true);
            }
            t *= 0.5;
        }
        Ok(false)
    }
}

/// Maximizes the model objective over the long-only simplex.
///
/// Projected-gradient ascent (see [`StepRule`]) interleaved with Newton
/// steps on the active face. Every accepted step increases the objective.
/// Stops once the KKT residual is at most `tolerance`; otherwise returns the
/// last (best) iterate with `converged = false`.
pub fn solve(model: &ModelSpec, config: &SolverConfig) -> Result<PortfolioSolution> {
    solve_traced(model, config).map(|(s, _)| s)
}

/// Like [`solve`], also returning the objective after every accepted step
/// (the first entry is the start point).
pub fn solve_traced(model: &ModelSpec, config: &SolverConfig) -> Result<(PortfolioSolution, Vec<f64>)> {
    model.validate()?;
    let n = model.n_assets();
    config.validate(n)?;
    let objective = Objective::compile(model);

    let x0 = match &config.start {
        StartPoint::Uniform => DVector::from_element(n, 1.0 / n as f64),
        StartPoint::Given(v) => renormalize(project_simplex(&DVector::from_row_slice(v))),
    };
    let mut state = State {
        objective: &objective,
        f: 0.0,
        x: x0.clone(),
        trace: Vec::new(),
    };
    let f0 = state.eval(&x0)?;
    state.f = f0;
    state.trace.push(f0);

    let g0 = objective.gradient(&state.x);
    let g0_norm = g0.norm();
    let base_step = if g0_norm > 0.0 { 1.0 / g0_norm } else { 1.0 };
    let mut step = base_step;

    let mut iterations = 0;
    let mut converged = false;
    let mut kkt = f64::INFINITY;
    for k in 1..=config.max_iterations {
        let g = objective.gradient(&state.x);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(numeric_failure("non-finite gradient", &state.x));
        }
        kkt = kkt_from_gradient(&g, &state.x);
        if kkt <= config.tolerance {
            converged = true;
            break;
        }
        iterations = k;

        let mut moved = false;
        match config.step_rule {
            StepRule::Backtracking => {
                let mut t = (step * 2.0).min(1e300);
                for _ in 0..MAX_BACKTRACKS {
                    let y = renormalize(project_simplex(&(&state.x + &g * t)));
                    if y == state.x {
                        break;
                    }
                    let fy = state.eval(&y)?;
                    let predicted = g.dot(&(&y - &state.x));
                    if fy > state.f && fy >= state.f + ARMIJO * predicted {
                        state.accept(y, fy);
                        step = t;
                        moved = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !moved {
                    step = (step * 0.5f64.powi(MAX_BACKTRACKS as i32)).max(f64::MIN_POSITIVE);
                }
            }
            StepRule::Diminishing { scale } => {
                let t = scale.unwrap_or(base_step) / (k as f64).sqrt();
                let y = renormalize(project_simplex(&(&state.x + &g * t)));
                let fy = state.eval(&y)?;
                if fy >= state.f && y != state.x {
                    state.accept(y, fy);
                    moved = true;
                }
            }
        }

        if config.polish {
            for _ in 0..MAX_POLISH_STEPS {
                if !state.polish_step()? {
                    break;
                }
                moved = true;
            }
        }

        if !moved && config.step_rule == StepRule::Backtracking {
            // no ascent direction found along the projected arc or the face
            kkt = kkt_from_gradient(&objective.gradient(&state.x), &state.x);
            converged = kkt <= config.tolerance;
            break;
        }
    }
    if !converged {
        kkt = kkt_from_gradient(&objective.gradient(&state.x), &state.x);
        converged = kkt <= config.tolerance;
    }

    let x = state.x;
    let solution = PortfolioSolution {
        objective: objective_value(model, &x)?,
        weights: x.iter().copied().collect(),
        iterations,
        kkt_residual: kkt,
        converged,
    };
    Ok((solution, state.trace))
}
