//! What a solver run leaves behind: one record per outer iteration, the
//! termination reason, and (optionally) every visited state for offline
//! analysis.

use crate::config::ResolvedPlan;
use std::fmt;
use std::time::Duration;

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `|x_k - x_{k-1}| <= step_tol`.
    StepTol,
    /// Outer iteration budget exhausted.
    MaxIters,
    /// Objective value or iterate norm exceeded the divergence guard.
    DivergenceGuard,
    /// The inner solver failed or produced an unusable step; details are on
    /// `monitor_warnings`.
    SubsolverFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::StepTol => "step-tolerance",
            Termination::MaxIters => "max-iterations",
            Termination::DivergenceGuard => "divergence-guard",
            Termination::SubsolverFailure => "subsolver-failure",
        })
    }
}

/// One outer iteration. Index `k` is 1-based: record `k` describes the state
/// after the `k`-th subproblem solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `f(x_k)`.
    pub f_value: f64,
    /// `|x_k - x_{k-1}|`.
    pub step_norm: f64,
    /// Monitored descent quantity
    /// `f(x_k) + lyapunov_coeff |x_k - x_{k-1}|^2`.
    pub lyapunov: f64,
    /// Primal-dual display quantity `E(x_k, y_{k-1}, x_{k-1})`, i.e.
    /// `f1(x_k) - <x_k, y_{k-1}> + f2*(y_{k-1}) + energy_coeff |x_k - x_{k-1}|^2`,
    /// with the conjugate evaluated through the subgradient identity
    /// `f2*(y_{k-1}) = <y_{k-1}, x_{k-1}> - f2(x_{k-1})`.
    pub energy: Option<f64>,
    /// Accepted duality-gap certificate for this step (0 for exact solves).
    pub epsilon: f64,
    /// Inner iterations spent on this step's subproblem(s).
    pub inner_iters: usize,
    /// Wall time from run start to the end of this step.
    pub elapsed: Duration,
}

/// Every visited state, for offline diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStates {
    /// `x_0, ..., x_K` (length `K + 1`).
    pub points: Vec<Vec<f64>>,
    /// `y_0, ..., y_{K-1}` with `y_k` a subgradient of `f2` at `x_k`
    /// (length `K`).
    pub subgradients: Vec<Vec<f64>>,
}

/// Result of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// The numeric plan the run executed.
    pub plan: ResolvedPlan,
    /// `f(x_0)`.
    pub f_initial: f64,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    /// Last iterate.
    pub final_point: Vec<f64>,
    /// Present when the run was configured with `store_states`.
    pub states: Option<TraceStates>,
    /// Descent-monitor and inner-solver warnings, in iteration order.
    pub monitor_warnings: Vec<String>,
}

impl Trace {
    /// Number of completed outer iterations.
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Objective at the last iterate (`f(x_0)` when no step was taken).
    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(self.f_initial, |r| r.f_value)
    }
}
