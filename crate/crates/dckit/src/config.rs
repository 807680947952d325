//! Solver selection and configuration: which iteration to run, how large an
//! inertial coefficient to use, and how strictly to police the descent
//! guarantees at runtime.
//!
//! A [`SolverConfig`] is resolved against a concrete
//! [`DcProblem`](crate::problem::DcProblem) into a [`ResolvedPlan`] holding
//! the numeric coefficients the engine needs: the inertial coefficient, its
//! admissible supremum, the effective modulus `sigma_bar` that governs the
//! monitored descent quantity, and the per-step decrease coefficient.

use crate::bounds::{self, BoundsError};
use crate::problem::DcProblem;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// The iteration to run.
///
/// All variants share one engine: they differ only in how the subproblem is
/// tilted and how step candidates are accepted.
///
/// * `Dca` — plain convexified iteration, no inertia.
/// * `Sdca` — proximal-regularized iteration: adds `gamma/2 |x - x_k|^2` to
///   each subproblem (any `gamma > 0`).
/// * `IndcaExact` / `RindcaExact` — inertial tilt `gamma (x_k - x_{k-1})`
///   with exact subproblem solves; the two differ only in the admissible
///   range (`gamma < sigma2 / 2` versus the refined
///   `gamma < (sigma1 + sigma2) / 2`).
/// * `IndcaInexact` / `RindcaInexact` — inertial tilt with certified inexact
///   solves: each step is accepted once its duality gap is at most
///   `lambda (sigma2 / 2) |x_{k+1} - x_k|^2`. `IndcaInexact` fixes the
///   splitting parameter `t = 1` (`gamma < (1 - lambda) sigma2 / 2`);
///   `RindcaInexact` optimizes `t` over `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Dca,
    Sdca,
    IndcaExact,
    IndcaInexact,
    RindcaExact,
    RindcaInexact,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Dca,
        Algorithm::Sdca,
        Algorithm::IndcaExact,
        Algorithm::IndcaInexact,
        Algorithm::RindcaExact,
        Algorithm::RindcaInexact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Dca => "dca",
            Algorithm::Sdca => "sdca",
            Algorithm::IndcaExact => "indca-e",
            Algorithm::IndcaInexact => "indca-n",
            Algorithm::RindcaExact => "rindca-e",
            Algorithm::RindcaInexact => "rindca-n",
        }
    }

    /// Whether steps are accepted through a duality-gap certificate instead
    /// of a plain inner stopping rule.
    pub fn is_inexact(self) -> bool {
        matches!(self, Algorithm::IndcaInexact | Algorithm::RindcaInexact)
    }

    /// Whether the subproblem tilt carries a `gamma (x_k - x_{k-1})` term.
    pub fn has_inertia(self) -> bool {
        !matches!(self, Algorithm::Dca | Algorithm::Sdca)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown algorithm '{0}' (expected one of: dca, sdca, indca-e, indca-n, rindca-e, rindca-n)")]
pub struct ParseAlgorithmError(String);

impl FromStr for Algorithm {
    type Err = ParseAlgorithmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dca" => Ok(Algorithm::Dca),
            "sdca" => Ok(Algorithm::Sdca),
            "indca-e" => Ok(Algorithm::IndcaExact),
            "indca-n" => Ok(Algorithm::IndcaInexact),
            "rindca-e" => Ok(Algorithm::RindcaExact),
            "rindca-n" => Ok(Algorithm::RindcaInexact),
            other => Err(ParseAlgorithmError(other.to_string())),
        }
    }
}

/// How the inertial (or proximal) coefficient is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    /// Use this value verbatim (validated against the algorithm's range).
    Explicit(f64),
    /// Use this fraction of the algorithm's admissible supremum. For `sdca`,
    /// which has no supremum, the fraction resolves against
    /// `(sigma1 + sigma2) / 2` as a convenience.
    Fraction(f64),
}

impl Default for GammaSpec {
    fn default() -> Self {
        GammaSpec::Fraction(0.99)
    }
}

/// How the inexact splitting parameter `t` is chosen (`rindca-n` only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TChoice {
    /// Maximize the admissible range: `t* = min(1, sqrt(lambda sigma2 / sigma1))`.
    Auto,
    /// Use this value in `(0, 1]`.
    Fixed(f64),
}

impl Default for TChoice {
    fn default() -> Self {
        TChoice::Auto
    }
}

/// What to do when the monitored descent quantity increases beyond the
/// certified slack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MonitorMode {
    /// Do not check.
    Off,
    /// Record a warning on the trace and keep going.
    #[default]
    Warn,
    /// Stop the run with an error.
    Abort,
}

impl fmt::Display for MonitorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MonitorMode::Off => "off",
            MonitorMode::Warn => "warn",
            MonitorMode::Abort => "abort",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown monitor mode '{0}' (expected off, warn, or abort)")]
pub struct ParseMonitorModeError(String);

impl FromStr for MonitorMode {
    type Err = ParseMonitorModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(MonitorMode::Off),
            "warn" => Ok(MonitorMode::Warn),
            "abort" => Ok(MonitorMode::Abort),
            other => Err(ParseMonitorModeError(other.to_string())),
        }
    }
}

/// Full solver configuration. Construct with [`SolverConfig::new`] and adjust
/// fields directly; every knob has a documented default.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Inertial coefficient (proximal weight for `sdca`). Default:
    /// `Fraction(0.99)` of the admissible supremum.
    pub gamma: GammaSpec,
    /// Relative tolerance of the step-acceptance certificate for inexact
    /// variants, in `(0, 1)`. Default 0.5.
    pub lambda: f64,
    /// Splitting parameter for `rindca-n`. Default: `Auto`.
    pub t: TChoice,
    /// Outer iteration budget. Default 200.
    pub max_outer: usize,
    /// Stop once `|x_{k} - x_{k-1}| <= step_tol`. Default 1e-8.
    pub step_tol: f64,
    /// Inner solver stopping tolerance (consecutive-iterate distance).
    /// Default 1e-4.
    pub inner_stop: f64,
    /// Inner solver iteration budget per subproblem. Default 2000.
    pub inner_max_iters: usize,
    /// Abort the run when `|f(x_k)|` or `|x_k|` exceeds this. Default 1e8.
    pub divergence_guard: f64,
    /// Keep all iterates and subgradients on the trace. Default true.
    pub store_states: bool,
    /// Descent-monitor behavior. Default `Warn`.
    pub monitor: MonitorMode,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            gamma: GammaSpec::default(),
            lambda: 0.5,
            t: TChoice::default(),
            max_outer: 200,
            step_tol: 1e-8,
            inner_stop: 1e-4,
            inner_max_iters: 2000,
            divergence_guard: 1e8,
            store_states: true,
            monitor: MonitorMode::Warn,
        }
    }
}

/// Outcome of checking a configuration against a problem.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// Hard errors; the configuration cannot run while any are present.
    pub violations: Vec<String>,
    /// Informational remarks (assumptions trusted, parameters auto-chosen,
    /// knobs ignored).
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Numeric coefficients the engine runs with, resolved from a configuration
/// and a problem's strong-convexity moduli.
///
/// The monitored descent quantity at iterate `k` is
/// `L_k = f(x_k) + lyapunov_coeff * |x_k - x_{k-1}|^2`, and each step must
/// satisfy `L_{k+1} <= L_k - descent_coeff * |x_k - x_{k-1}|^2` up to the
/// certified slack of the inner solves.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPlan {
    pub algorithm: Algorithm,
    pub sigma1: f64,
    pub sigma2: f64,
    /// The user-facing coefficient: inertial weight, or proximal weight for
    /// `sdca`.
    pub gamma: f64,
    /// Supremum of the admissible range for `gamma` (`inf` for `sdca`, 0 for
    /// `dca`).
    pub gamma_sup: f64,
    /// Inertial coefficient inside the engine: equals `gamma` for inertial
    /// variants, 0 for `dca` and `sdca`.
    pub gamma_inertial: f64,
    /// Extra quadratic weight added to every subproblem (`sdca` only).
    pub ridge: f64,
    /// Splitting parameter of the inexact analysis (1 when unused).
    pub t: f64,
    /// Certificate tolerance (meaningful only when `inexact`).
    pub lambda: f64,
    /// Whether steps require duality-gap certificates.
    pub inexact: bool,
    /// Effective modulus governing descent: `sigma1 + sigma2` for exact
    /// variants, `sigma1 + sigma2 + 2 gamma` for `sdca`,
    /// `sigma1 (1 - t) + sigma2 - lambda sigma2 / t` for inexact variants.
    pub sigma_bar: f64,
    /// `(sigma_bar - gamma_inertial) / 2`.
    pub lyapunov_coeff: f64,
    /// `(sigma_bar - 2 gamma_inertial) / 2`.
    pub descent_coeff: f64,
    /// Coefficient of the primal-dual display quantity
    /// `E(x, y, z) = f1(x) - <x, y> + f2*(y) + energy_coeff |x - z|^2`,
    /// namely `(sigma1 - gamma_inertial) / 2` for the problem's own
    /// decomposition.
    pub energy_coeff: f64,
}

fn bounds_error_text(e: &BoundsError) -> String {
    e.to_string()
}

struct Resolution {
    plan: Option<ResolvedPlan>,
    violations: Vec<String>,
    notes: Vec<String>,
}

impl SolverConfig {
    fn resolve_inner(&self, problem: &DcProblem) -> Resolution {
        let mut violations = Vec::new();
        let mut notes = Vec::new();
        let sigma1 = problem.sigma1();
        let sigma2 = problem.sigma2();
        let alg = self.algorithm;

        // Generic knob checks.
        if self.max_outer == 0 {
            violations.push("max_outer must be at least 1".into());
        }
        if !(self.step_tol > 0.0) || !self.step_tol.is_finite() {
            violations.push(format!(
                "step_tol must be positive and finite, got {}",
                self.step_tol
            ));
        }
        if !(self.inner_stop >= 0.0) || !self.inner_stop.is_finite() {
            violations.push(format!(
                "inner_stop must be nonnegative and finite, got {}",
                self.inner_stop
            ));
        }
        if self.inner_max_iters == 0 {
            violations.push("inner_max_iters must be at least 1".into());
        }
        if !(self.divergence_guard > 0.0) {
            violations.push(format!(
                "divergence_guard must be positive, got {}",
                self.divergence_guard
            ));
        }
        if alg.is_inexact() && !(self.lambda > 0.0 && self.lambda < 1.0) {
            violations.push(format!(
                "lambda must lie in (0, 1) for {alg}, got {}",
                self.lambda
            ));
        }
        match self.gamma {
            GammaSpec::Explicit(g) if !(g >= 0.0) || !g.is_finite() => {
                violations.push(format!(
                    "explicit gamma must be nonnegative and finite, got {g}"
                ));
            }
            GammaSpec::Fraction(f) if !(0.0..1.0).contains(&f) => {
                violations.push(format!("gamma fraction must lie in [0, 1), got {f}"));
            }
            _ => {}
        }
        if !violations.is_empty() {
            return Resolution {
                plan: None,
                violations,
                notes,
            };
        }

        // Algorithm-specific gamma range and effective modulus.
        let mut t = 1.0;
        let lambda = self.lambda;
        let (gamma_sup, sigma_bar_at_gamma0): (f64, f64) = match alg {
            Algorithm::Dca => (0.0, sigma1 + sigma2),
            Algorithm::Sdca => (f64::INFINITY, sigma1 + sigma2),
            Algorithm::RindcaExact => match bounds::gamma_sup_exact(sigma1, sigma2) {
                Ok(s) => (s, sigma1 + sigma2),
                Err(e) => {
                    violations.push(bounds_error_text(&e));
                    (0.0, sigma1 + sigma2)
                }
            },
            Algorithm::IndcaExact => {
                if sigma2 <= 0.0 {
                    violations.push(format!(
                        "indca-e needs sigma2 > 0 to admit any inertia, got sigma2 = {sigma2}"
                    ));
                }
                (0.5 * sigma2, sigma1 + sigma2)
            }
            Algorithm::IndcaInexact | Algorithm::RindcaInexact => {
                if alg == Algorithm::IndcaInexact {
                    t = 1.0;
                    if let TChoice::Fixed(tf) = self.t {
                        if tf != 1.0 {
                            notes.push(format!(
                                "indca-n fixes the splitting parameter t = 1; configured t = {tf} is ignored"
                            ));
                        }
                    }
                } else {
                    match self.t {
                        TChoice::Auto => match bounds::gamma_sup_inexact(sigma1, sigma2, lambda) {
                            Ok(report) => {
                                t = report.t_star;
                                notes.push(format!(
                                    "auto-selected splitting t = {t} ({} case)",
                                    report.case
                                ));
                            }
                            Err(e) => {
                                violations.push(bounds_error_text(&e));
                            }
                        },
                        TChoice::Fixed(tf) => {
                            if !(tf > 0.0 && tf <= 1.0) {
                                violations.push(format!("t must lie in (0, 1], got {tf}"));
                            } else {
                                t = tf;
                            }
                        }
                    }
                }
                if sigma2 <= 0.0 {
                    violations.push(format!(
                        "{alg} needs sigma2 > 0 for the step-acceptance certificate, got sigma2 = {sigma2}"
                    ));
                }
                if violations.is_empty() {
                    let sb = bounds::sigma_bar(sigma1, sigma2, lambda, t);
                    if sb <= 0.0 {
                        violations.push(format!(
                            "sigma_bar(t = {t}) = {sb} <= 0: no admissible gamma; \
                             decrease lambda or choose t closer to the optimum"
                        ));
                    }
                    (0.5 * sb.max(0.0), sb)
                } else {
                    (0.0, 0.0)
                }
            }
        };

        if !violations.is_empty() {
            return Resolution {
                plan: None,
                violations,
                notes,
            };
        }

        // Resolve gamma against the range.
        let gamma = match (alg, self.gamma) {
            (Algorithm::Dca, GammaSpec::Explicit(g)) => {
                if g != 0.0 {
                    violations.push(format!(
                        "dca takes no inertial coefficient; got explicit gamma = {g}"
                    ));
                }
                0.0
            }
            (Algorithm::Dca, GammaSpec::Fraction(_)) => 0.0,
            (Algorithm::Sdca, GammaSpec::Explicit(g)) => {
                if !(g > 0.0) {
                    violations.push(format!("sdca needs gamma > 0, got {g}"));
                }
                g
            }
            (Algorithm::Sdca, GammaSpec::Fraction(f)) => {
                let g = f * 0.5 * (sigma1 + sigma2);
                if !(g > 0.0) {
                    violations.push(format!(
                        "sdca gamma fraction {f} resolves against (sigma1 + sigma2) / 2 = {} \
                         and yields gamma = {g}; pass an explicit gamma > 0",
                        0.5 * (sigma1 + sigma2)
                    ));
                }
                g
            }
            (_, GammaSpec::Explicit(g)) => {
                if g >= gamma_sup {
                    violations.push(format!(
                        "gamma = {g} is outside the admissible range [0, {gamma_sup}) for {alg}"
                    ));
                }
                g
            }
            (_, GammaSpec::Fraction(f)) => f * gamma_sup,
        };

        if !violations.is_empty() {
            return Resolution {
                plan: None,
                violations,
                notes,
            };
        }

        let (gamma_inertial, ridge) = match alg {
            Algorithm::Dca => (0.0, 0.0),
            Algorithm::Sdca => (0.0, gamma),
            _ => (gamma, 0.0),
        };
        let sigma_bar = match alg {
            Algorithm::Sdca => sigma1 + sigma2 + 2.0 * gamma,
            _ => sigma_bar_at_gamma0,
        };

        if sigma1 == 0.0 && ridge == 0.0 {
            notes.push(
                "sigma1 = 0 with no ridge: subproblems may have multiple minimizers, so traces \
                 depend on the inner solver's selection"
                    .into(),
            );
        }
        notes.push(
            "level-boundedness of the objective is assumed, not checked; the divergence guard \
             is the only runtime safety net"
                .into(),
        );

        let plan = ResolvedPlan {
            algorithm: alg,
            sigma1,
            sigma2,
            gamma,
            gamma_sup,
            gamma_inertial,
            ridge,
            t,
            lambda,
            inexact: alg.is_inexact(),
            sigma_bar,
            lyapunov_coeff: 0.5 * (sigma_bar - gamma_inertial),
            descent_coeff: 0.5 * (sigma_bar - 2.0 * gamma_inertial),
            energy_coeff: 0.5 * (sigma1 - gamma_inertial),
        };
        Resolution {
            plan: Some(plan),
            violations,
            notes,
        }
    }

    /// Checks this configuration against a problem without running anything.
    pub fn validate(&self, problem: &DcProblem) -> ValidationReport {
        let r = self.resolve_inner(problem);
        ValidationReport {
            violations: r.violations,
            notes: r.notes,
        }
    }

    /// Resolves the numeric plan, or reports why the configuration is
    /// invalid for this problem.
    pub fn resolve(&self, problem: &DcProblem) -> Result<ResolvedPlan, ValidationReport> {
        let r = self.resolve_inner(problem);
        match r.plan {
            Some(plan) if r.violations.is_empty() => Ok(plan),
            _ => Err(ValidationReport {
                violations: r.violations,
                notes: r.notes,
            }),
        }
    }
}
