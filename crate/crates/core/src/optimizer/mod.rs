//! Concave maximization over the long-only simplex `{x >= 0, 1'x = 1}`.

mod model;
mod simplex;
mod solver;

pub use model::{objective_subgradient, objective_value, ModelKind, ModelSpec, UncertaintySpec, SOC_EPSILON};
pub use simplex::project_simplex;
pub use solver::{
    kkt_residual, solve, solve_traced, PortfolioSolution, SolverConfig, StartPoint, StepRule, ACTIVITY_THRESHOLD,
};
