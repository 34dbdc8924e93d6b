//! Numerical side: the Runge-Kutta stepper, fundamental pairs of linear
//! second-order equations, line integrals and diagnostics.

mod diag;
mod linear;
mod path;
mod rk;

pub use diag::{constancy_report, fd_form_closure, solution_residual, transformed_ode_drift, ClosureReport, SolutionResidual};
pub use linear::{wronskian_drift, FundamentalPair, LinearOdeSpec};
pub use path::{gauss_legendre, integrate_compiled, path_integral, path_integral_checked, ConstraintFn, LevelSet, PathSpec};
pub use rk::{dopri5, ode_system, rk_solve, RkOptions, Trajectory};

use crate::expr::EvalError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64, state: Vec<f64> },
    #[error("step limit reached after {steps} steps at x = {x}")]
    TooManySteps { x: f64, steps: usize },
    #[error("{x} outside the sampled range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("solution leaves the sampling box at s = {s} (x = {x}, u = {u})")]
    OutOfBox { s: f64, x: f64, u: f64 },
    #[error("singular data: {0}")]
    Singular(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("path dependence: direct {direct}, detour {detour}")]
    PathDependence { direct: f64, detour: f64 },
    #[error("bad setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
