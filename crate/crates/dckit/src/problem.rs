//! The DC problem model: two convex parts, their moduli, and the oracles a
//! solver needs.
//!
//! A problem minimizes `f = f1 - f2` with both parts proper closed convex,
//! `f1` at least `sigma1`-strongly convex and `f2` at least
//! `sigma2`-strongly convex (either modulus may be 0). Solvers touch the
//! problem only through oracles:
//!
//! * `f1` values (with `None` signalling a point outside its domain),
//! * `f2` values and one subgradient per point,
//! * a tilted-subproblem solver returning a certified
//!   [`SubproblemResult`](crate::subsolvers::SubproblemResult) for
//!   `argmin f1(x) + ridge/2 |x|^2 - <tilt, x>`.
//!
//! The `ridge` term exists so that proximal-regularized runs can reuse the
//! same oracle: regularizing a problem only shifts the quadratic weight its
//! subproblems carry.

use crate::subsolvers::{SubproblemResult, SubsolverError};
use crate::vecmath;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("strong-convexity moduli must be finite and nonnegative, got {0} and {1}")]
    BadModuli(f64, f64),
    #[error("{0}")]
    BadData(String),
}

/// One convex subproblem: minimize `f1(x) + ridge/2 |x|^2 - <tilt, x>`.
pub struct SubproblemRequest<'a> {
    pub tilt: &'a [f64],
    /// Extra quadratic weight added by proximal regularization; 0 for the
    /// plain iteration.
    pub ridge: f64,
    /// Stop once the certified gap reaches this level (0 means "solve to the
    /// inner stopping rule").
    pub target_gap: f64,
    /// Natural starting point for iterative inner solvers.
    pub warm_start: &'a [f64],
    pub inner_stop: f64,
    pub max_iters: usize,
    /// Early-acceptance predicate on (candidate, certified gap), polled by
    /// iterative inner solvers every iteration.
    pub accept: Option<&'a dyn Fn(&[f64], f64) -> bool>,
}

type F1Fn = Arc<dyn Fn(&[f64]) -> Option<f64> + Send + Sync>;
type F2Fn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type SubgradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type SubproblemFn =
    Arc<dyn Fn(&SubproblemRequest) -> Result<SubproblemResult, SubsolverError> + Send + Sync>;

/// A DC decomposition with its solver oracles. Cheap to clone and safe to
/// share across threads; all state is immutable.
#[derive(Clone)]
pub struct DcProblem {
    label: String,
    dimension: usize,
    sigma1: f64,
    sigma2: f64,
    f1: F1Fn,
    f2: F2Fn,
    f2_subgradient: SubgradFn,
    subproblem: SubproblemFn,
}

impl std::fmt::Debug for DcProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DcProblem")
            .field("label", &self.label)
            .field("dimension", &self.dimension)
            .field("sigma1", &self.sigma1)
            .field("sigma2", &self.sigma2)
            .finish_non_exhaustive()
    }
}

impl DcProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        dimension: usize,
        sigma1: f64,
        sigma2: f64,
        f1: impl Fn(&[f64]) -> Option<f64> + Send + Sync + 'static,
        f2: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        f2_subgradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        subproblem: impl Fn(&SubproblemRequest) -> Result<SubproblemResult, SubsolverError>
            + Send
            + Sync
            + 'static,
    ) -> Result<Self, ProblemError> {
        if dimension == 0 {
            return Err(ProblemError::ZeroDimension);
        }
        if !(sigma1 >= 0.0 && sigma2 >= 0.0) || !sigma1.is_finite() || !sigma2.is_finite() {
            return Err(ProblemError::BadModuli(sigma1, sigma2));
        }
        Ok(Self {
            label: label.into(),
            dimension,
            sigma1,
            sigma2,
            f1: Arc::new(f1),
            f2: Arc::new(f2),
            f2_subgradient: Arc::new(f2_subgradient),
            subproblem: Arc::new(subproblem),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Strong-convexity modulus of the first part.
    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    /// Strong-convexity modulus of the second part.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `f1(x)`, or `None` outside its domain.
    pub fn eval_f1(&self, x: &[f64]) -> Option<f64> {
        debug_assert_eq!(x.len(), self.dimension);
        (self.f1)(x)
    }

    pub fn eval_f2(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        (self.f2)(x)
    }

    /// One subgradient of `f2` at `x` (the gradient wherever `f2` is
    /// differentiable).
    pub fn subgrad_f2(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dimension);
        (self.f2_subgradient)(x)
    }

    pub fn solve_subproblem(
        &self,
        req: &SubproblemRequest,
    ) -> Result<SubproblemResult, SubsolverError> {
        debug_assert_eq!(req.tilt.len(), self.dimension);
        debug_assert_eq!(req.warm_start.len(), self.dimension);
        debug_assert!(req.ridge >= 0.0);
        (self.subproblem)(req)
    }

    /// `f(x) = f1(x) - f2(x)`, or `None` outside the domain of `f1`.
    pub fn objective(&self, x: &[f64]) -> Option<f64> {
        Some(self.eval_f1(x)? - self.eval_f2(x))
    }

    /// The descent quantity `f(x) + (sigma1 + sigma2 - gamma)/2 |x - x_prev|^2`
    /// that exact-solve inertial runs drive monotonically downward.
    pub fn lyapunov(&self, x: &[f64], x_prev: &[f64], gamma: f64) -> Option<f64> {
        let coeff = 0.5 * (self.sigma1 + self.sigma2 - gamma);
        Some(self.objective(x)? + coeff * vecmath::dist_sq(x, x_prev))
    }

    /// The same decomposition shifted by `rho/2 |x|^2` on both sides.
    ///
    /// The objective is unchanged, criticality is unchanged, but both moduli
    /// grow by `rho`, and subproblems gain `rho` of ridge. This is the
    /// regularized problem that makes the proximal-regularized iteration a
    /// plain DCA run.
    pub fn regularized(&self, rho: f64) -> DcProblem {
        assert!(rho >= 0.0 && rho.is_finite());
        let f1 = Arc::clone(&self.f1);
        let f2 = Arc::clone(&self.f2);
        let sub = Arc::clone(&self.f2_subgradient);
        let solve = Arc::clone(&self.subproblem);
        DcProblem {
            label: format!("{}+ridge{}", self.label, rho),
            dimension: self.dimension,
            sigma1: self.sigma1 + rho,
            sigma2: self.sigma2 + rho,
            f1: Arc::new(move |x: &[f64]| Some(f1(x)? + 0.5 * rho * vecmath::norm_sq(x))),
            f2: Arc::new(move |x: &[f64]| f2(x) + 0.5 * rho * vecmath::norm_sq(x)),
            f2_subgradient: Arc::new(move |x: &[f64]| {
                let mut g = sub(x);
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi += rho * xi;
                }
                g
            }),
            subproblem: Arc::new(move |req: &SubproblemRequest| {
                let shifted = SubproblemRequest {
                    tilt: req.tilt,
                    ridge: req.ridge + rho,
                    target_gap: req.target_gap,
                    warm_start: req.warm_start,
                    inner_stop: req.inner_stop,
                    max_iters: req.max_iters,
                    accept: req.accept,
                };
                solve(&shifted)
            }),
        }
    }
}
