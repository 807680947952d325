//! The outer iteration engine shared by every algorithm variant.
//!
//! Each outer step draws a subgradient `y_k` of `f2` at the current point,
//! tilts the convex subproblem
//!
//! ```text
//! minimize  f1(x) + ridge/2 |x|^2 - <y_k + gamma (x_k - x_{k-1}) + ridge x_k, x>
//! ```
//!
//! and takes its (possibly certified-inexact) solution as the next iterate.
//! Plain `dca` uses `gamma = ridge = 0`; `sdca` uses `ridge = gamma` with no
//! inertia; the inertial variants use `gamma > 0` with no ridge. Inexact
//! variants accept a candidate `x` once its certified duality gap satisfies
//! `gap <= lambda (sigma2 / 2) |x - x_k|^2`, retrying with a tighter inner
//! tolerance (warm-started) until it does.
//!
//! A descent monitor tracks `L_k = f(x_k) + lyapunov_coeff |x_k - x_{k-1}|^2`
//! and checks `L_{k+1} <= L_k - descent_coeff |x_k - x_{k-1}|^2` up to a
//! slack of twice the step's certified gap plus a relative epsilon; failures
//! are warnings or aborts depending on
//! [`MonitorMode`](crate::config::MonitorMode).

use crate::config::{Algorithm, MonitorMode, ResolvedPlan, SolverConfig, ValidationReport};
use crate::problem::{DcProblem, SubproblemRequest};
use crate::subsolvers::{certify_step, SubproblemResult, SubsolverError};
use crate::trace::{IterationRecord, Termination, Trace, TraceStates};
use crate::vecmath;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration:\n{0}")]
    Invalid(ValidationReport),
    #[error("objective is undefined (f1 takes the value +infinity) at iteration {iter}")]
    OutsideDomain { iter: usize },
    #[error(
        "descent monitor abort at iteration {iter}: monitored value rose from {previous} to \
         {value}, exceeding the certified slack {slack:e}"
    )]
    Lyapunov {
        iter: usize,
        previous: f64,
        value: f64,
        slack: f64,
    },
    #[error(
        "step certificate unavailable at iteration {iter}: the subproblem solver reports no \
         finite duality gap, so inexact steps cannot be accepted"
    )]
    CertificateUnavailable { iter: usize },
    #[error("trace does not store states; rerun with store_states = true")]
    MissingStates,
}

/// How many times an unaccepted inexact step is retried with a 10x tighter
/// inner tolerance before the run gives up.
const CERTIFY_RETRIES: usize = 8;

enum StepOutcome {
    Step {
        result: SubproblemResult,
        epsilon: f64,
    },
    /// The candidate collapsed onto the current point before a certificate
    /// could be established: the iteration has converged.
    Critical,
    Failed(String),
}

fn solve_step(
    problem: &DcProblem,
    plan: &ResolvedPlan,
    config: &SolverConfig,
    tilt: &[f64],
    x: &[f64],
    k: usize,
) -> Result<StepOutcome, SolverError> {
    if !plan.inexact {
        let req = SubproblemRequest {
            tilt,
            ridge: plan.ridge,
            target_gap: 0.0,
            warm_start: x,
            inner_stop: config.inner_stop,
            max_iters: config.inner_max_iters,
            accept: None,
        };
        return Ok(match problem.solve_subproblem(&req) {
            Ok(result) => StepOutcome::Step {
                result,
                epsilon: 0.0,
            },
            Err(e) => StepOutcome::Failed(format!("iteration {k}: subproblem solver failed: {e}")),
        });
    }

    let lambda = plan.lambda;
    let sigma2 = plan.sigma2;
    let accept = move |cand: &[f64], gap: f64| certify_step(gap, cand, x, lambda, sigma2).accepted;
    let mut inner_stop = config.inner_stop;
    let mut warm = x.to_vec();
    for _ in 0..=CERTIFY_RETRIES {
        let req = SubproblemRequest {
            tilt,
            ridge: plan.ridge,
            target_gap: 0.0,
            warm_start: &warm,
            inner_stop,
            max_iters: config.inner_max_iters,
            accept: Some(&accept),
        };
        let result = match problem.solve_subproblem(&req) {
            Ok(r) => r,
            Err(e) => {
                return Ok(StepOutcome::Failed(format!(
                    "iteration {k}: subproblem solver failed: {e}"
                )))
            }
        };
        let cert = certify_step(result.gap, &result.point, x, lambda, sigma2);
        if cert.accepted {
            return Ok(StepOutcome::Step {
                result,
                epsilon: cert.epsilon,
            });
        }
        if !result.gap.is_finite() {
            return Err(SolverError::CertificateUnavailable { iter: k });
        }
        if vecmath::dist(&result.point, x) <= config.step_tol {
            return Ok(StepOutcome::Critical);
        }
        inner_stop *= 0.1;
        warm = result.point;
    }
    Ok(StepOutcome::Failed(format!(
        "iteration {k}: step certificate not reached after {CERTIFY_RETRIES} inner-tolerance \
         tightenings"
    )))
}

/// Runs the configured algorithm from `x0` until a stopping rule fires.
///
/// Numeric breakdowns inside a run (inner-solver failure, non-finite steps)
/// terminate it gracefully with [`Termination::SubsolverFailure`] and an
/// explanatory warning on the trace; only configuration-level mistakes are
/// reported as errors.
pub fn run(problem: &DcProblem, config: &SolverConfig, x0: &[f64]) -> Result<Trace, SolverError> {
    let plan = config.resolve(problem).map_err(SolverError::Invalid)?;
    if x0.len() != problem.dimension() || !vecmath::all_finite(x0) {
        return Err(SolverError::Invalid(ValidationReport {
            violations: vec![format!(
                "starting point must be finite with dimension {}, got length {}",
                problem.dimension(),
                x0.len()
            )],
            notes: Vec::new(),
        }));
    }
    let f1_0 = problem
        .eval_f1(x0)
        .ok_or(SolverError::OutsideDomain { iter: 0 })?;
    let mut f2_cur = problem.eval_f2(x0);
    let f0 = f1_0 - f2_cur;

    let start = Instant::now();
    let n = problem.dimension();
    let mut x_prev = x0.to_vec();
    let mut x = x0.to_vec();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut points: Vec<Vec<f64>> = if config.store_states {
        vec![x0.to_vec()]
    } else {
        Vec::new()
    };
    let mut subgradients: Vec<Vec<f64>> = Vec::new();
    let mut l_prev = f0;
    let mut prev_step_sq = 0.0;
    let mut termination = Termination::MaxIters;
    let mut gap_warned = false;

    for k in 1..=config.max_outer {
        let y = problem.subgrad_f2(&x);
        let mut tilt = y.clone();
        for i in 0..n {
            tilt[i] += plan.gamma_inertial * (x[i] - x_prev[i]) + plan.ridge * x[i];
        }

        let (result, epsilon) = match solve_step(problem, &plan, config, &tilt, &x, k)? {
            StepOutcome::Step { result, epsilon } => (result, epsilon),
            StepOutcome::Critical => {
                termination = Termination::StepTol;
                break;
            }
            StepOutcome::Failed(msg) => {
                warnings.push(msg);
                termination = Termination::SubsolverFailure;
                break;
            }
        };

        let x_next = result.point;
        if x_next.len() != n || !vecmath::all_finite(&x_next) {
            warnings.push(format!(
                "iteration {k}: subproblem returned a non-finite or misshapen point"
            ));
            termination = Termination::SubsolverFailure;
            break;
        }
        let f1_next = match problem.eval_f1(&x_next) {
            Some(v) => v,
            None => return Err(SolverError::OutsideDomain { iter: k }),
        };
        let f2_next = problem.eval_f2(&x_next);
        let f_next = f1_next - f2_next;

        let step_sq = vecmath::dist_sq(&x_next, &x);
        let step_norm = step_sq.sqrt();
        let l_next = f_next + plan.lyapunov_coeff * step_sq;
        // Display energy E(x_{k}, y_{k-1}, x_{k-1}) for the point just
        // produced: the conjugate f2*(y) collapses to <y, x> - f2(x) at the
        // point the subgradient was drawn.
        let mut cross = 0.0;
        for i in 0..n {
            cross += (x_next[i] - x[i]) * y[i];
        }
        let energy = f1_next - cross - f2_cur + plan.energy_coeff * step_sq;

        if config.monitor != MonitorMode::Off {
            let gap_for_slack = if plan.inexact { epsilon } else { result.gap };
            let slack = if gap_for_slack.is_finite() {
                2.0 * gap_for_slack + 1e-9 * (1.0 + l_prev.abs())
            } else {
                if !gap_warned {
                    warnings.push(format!(
                        "iteration {k}: subproblem solver reports no finite duality gap; the \
                         descent monitor cannot certify violations and accepts any change"
                    ));
                    gap_warned = true;
                }
                f64::INFINITY
            };
            let allowed = l_prev - plan.descent_coeff * prev_step_sq + slack;
            if l_next > allowed {
                match config.monitor {
                    MonitorMode::Warn => warnings.push(format!(
                        "iteration {k}: monitored descent quantity rose from {l_prev} to \
                         {l_next}, exceeding the certified bound {allowed}"
                    )),
                    MonitorMode::Abort => {
                        return Err(SolverError::Lyapunov {
                            iter: k,
                            previous: l_prev,
                            value: l_next,
                            slack,
                        })
                    }
                    MonitorMode::Off => unreachable!(),
                }
            }
        }

        records.push(IterationRecord {
            k,
            f_value: f_next,
            step_norm,
            lyapunov: l_next,
            energy: Some(energy),
            epsilon,
            inner_iters: result.inner_iters,
            elapsed: start.elapsed(),
        });
        if config.store_states {
            subgradients.push(y);
            points.push(x_next.clone());
        }

        x_prev = std::mem::replace(&mut x, x_next);
        l_prev = l_next;
        prev_step_sq = step_sq;
        f2_cur = f2_next;

        let x_norm = vecmath::norm(&x);
        if !f_next.is_finite()
            || f_next.abs() > config.divergence_guard
            || !x_norm.is_finite()
            || x_norm > config.divergence_guard
        {
            termination = Termination::DivergenceGuard;
            break;
        }
        if step_norm <= config.step_tol {
            termination = Termination::StepTol;
            break;
        }
    }

    Ok(Trace {
        plan,
        f_initial: f0,
        records,
        termination,
        final_point: x,
        states: config
            .store_states
            .then_some(TraceStates {
                points,
                subgradients,
            }),
        monitor_warnings: warnings,
    })
}

/// Runs plain `dca` with the rest of the configuration taken from `config`.
pub fn run_dca(
    problem: &DcProblem,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<Trace, SolverError> {
    let mut c = config.clone();
    c.algorithm = Algorithm::Dca;
    run(problem, &c, x0)
}

/// Runs the proximal-regularized variant with weight `gamma`.
pub fn run_sdca(
    problem: &DcProblem,
    x0: &[f64],
    gamma: f64,
    config: &SolverConfig,
) -> Result<Trace, SolverError> {
    let mut c = config.clone();
    c.algorithm = Algorithm::Sdca;
    c.gamma = crate::config::GammaSpec::Explicit(gamma);
    run(problem, &c, x0)
}

/// Runs the refined inertial variant with exact subproblem solves.
pub fn run_rindca_exact(
    problem: &DcProblem,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<Trace, SolverError> {
    let mut c = config.clone();
    c.algorithm = Algorithm::RindcaExact;
    run(problem, &c, x0)
}

/// Runs the refined inertial variant with certified inexact solves.
pub fn run_rindca_inexact(
    problem: &DcProblem,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<Trace, SolverError> {
    let mut c = config.clone();
    c.algorithm = Algorithm::RindcaInexact;
    run(problem, &c, x0)
}

/// Fixed-point residual of the plain iteration at `x`: the distance from `x`
/// to the solution of one untilted subproblem. Zero exactly at points where
/// the chosen subgradient of `f2` is also a subgradient of `f1`.
pub fn criticality_residual(
    problem: &DcProblem,
    x: &[f64],
    inner_stop: f64,
    max_iters: usize,
) -> Result<f64, SubsolverError> {
    let y = problem.subgrad_f2(x);
    let req = SubproblemRequest {
        tilt: &y,
        ridge: 0.0,
        target_gap: 0.0,
        warm_start: x,
        inner_stop,
        max_iters,
        accept: None,
    };
    let result = problem.solve_subproblem(&req)?;
    Ok(vecmath::dist(&result.point, x))
}

/// Recomputes the primal-dual display quantity
///
/// ```text
/// E(x_{k+1}, y_k, x_k) = f1(x_{k+1}) - <x_{k+1}, y_k> + f2*(y_k)
///                        + energy_coeff |x_{k+1} - x_k|^2
/// ```
///
/// from the stored states, evaluating the conjugate through the subgradient
/// identity `f2*(y_k) = <y_k, x_k> - f2(x_k)`. The result has one value per
/// completed step, aligned with `trace.records` (entry `r` is the `energy`
/// field of record `r`, recomputed from scratch).
pub fn energy_along_trace(problem: &DcProblem, trace: &Trace) -> Result<Vec<f64>, SolverError> {
    let states = trace.states.as_ref().ok_or(SolverError::MissingStates)?;
    let coeff = trace.plan.energy_coeff;
    let mut out = Vec::with_capacity(states.subgradients.len());
    for (r, y) in states.subgradients.iter().enumerate() {
        let x_at = &states.points[r];
        let x_next = &states.points[r + 1];
        let f1 = problem
            .eval_f1(x_next)
            .ok_or(SolverError::OutsideDomain { iter: r + 1 })?;
        let conjugate = vecmath::dot(y, x_at) - problem.eval_f2(x_at);
        let e = f1 - vecmath::dot(x_next, y) + conjugate + coeff * vecmath::dist_sq(x_next, x_at);
        out.push(e);
    }
    Ok(out)
}
