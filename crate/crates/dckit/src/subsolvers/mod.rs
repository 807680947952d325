//! Inner solvers for the convex subproblems, all reporting how inexact the
//! returned point is via a duality-gap certificate.

mod fista;
mod tv_prox;

pub use fista::{fista_composite, Composite, FistaOptions};
pub use tv_prox::{tv_prox, TvProxOptions, TvProxOutcome};

use thiserror::Error;

/// Outcome of one convex subproblem solve.
///
/// `gap` bounds the objective suboptimality of `point` from above; a point
/// with gap `d` certifies that the subproblem tilt is a `d`-subgradient of
/// the subproblem's convex part at `point`. `converged` is false only when
/// the iteration budget ran out before the stopping rule (or requested gap)
/// was met; the best point seen is still returned.
#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub point: Vec<f64>,
    pub gap: f64,
    pub inner_iters: usize,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum SubsolverError {
    #[error("inner solve produced a non-finite value at iteration {iter}")]
    NonFinite { iter: usize },
    #[error("subproblem structure is singular: {0}")]
    Singular(String),
}

/// Elementwise soft-thresholding, the exact proximal map of
/// `tau * |.|_1`: shrinks each entry toward zero by `tau`.
pub fn soft_threshold(v: &[f64], tau: f64) -> Vec<f64> {
    debug_assert!(tau >= 0.0);
    v.iter()
        .map(|&x| {
            if x > tau {
                x - tau
            } else if x < -tau {
                x + tau
            } else {
                0.0
            }
        })
        .collect()
}

pub fn soft_threshold_in_place(v: &mut [f64], tau: f64) {
    debug_assert!(tau >= 0.0);
    for x in v.iter_mut() {
        *x = if *x > tau {
            *x - tau
        } else if *x < -tau {
            *x + tau
        } else {
            0.0
        };
    }
}

/// The inexactness acceptance rule: a candidate step from `x_prev` to
/// `point` whose solve carries certified gap `gap` is acceptable when
/// `gap <= lambda * (sigma2 / 2) * |point - x_prev|^2`.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonCertificate {
    /// The certified inexactness actually used (the duality gap).
    pub epsilon: f64,
    /// The admissible budget `lambda * sigma2 / 2 * step^2`.
    pub threshold: f64,
    pub accepted: bool,
}

pub fn certify_step(
    gap: f64,
    point: &[f64],
    x_prev: &[f64],
    lambda: f64,
    sigma2: f64,
) -> EpsilonCertificate {
    debug_assert!(lambda > 0.0 && sigma2 >= 0.0);
    let threshold = lambda * 0.5 * sigma2 * crate::vecmath::dist_sq(point, x_prev);
    EpsilonCertificate {
        epsilon: gap,
        threshold,
        accepted: gap.is_finite() && gap >= 0.0 && gap <= threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[3.0, -0.5, 1.0], 1.0), vec![2.0, 0.0, 0.0]);
        assert_eq!(soft_threshold(&[0.0], 0.0), vec![0.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        /// Soft-thresholding minimizes `0.5 (z - v)^2 + tau |z|` exactly:
        /// no candidate on a fine grid does better.
        #[test]
        fn soft_threshold_is_the_prox(v in -5.0f64..5.0, tau in 0.0f64..3.0) {
            let z = soft_threshold(&[v], tau)[0];
            let obj = |t: f64| 0.5 * (t - v) * (t - v) + tau * t.abs();
            let best = obj(z);
            let mut t = -6.0;
            while t <= 6.0 {
                prop_assert!(best <= obj(t) + 1e-9, "prox beaten at {t}");
                t += 0.01;
            }
        }
    }

    #[test]
    fn certificate_accepts_within_budget() {
        let a = [1.0, 1.0];
        let b = [0.0, 0.0];
        // threshold = 0.5 * 0.5 * 2.0 * 2.0 = 1.0
        let c = certify_step(0.9, &a, &b, 0.5, 2.0);
        assert!(c.accepted && (c.threshold - 1.0).abs() < 1e-15);
        assert!(!certify_step(1.1, &a, &b, 0.5, 2.0).accepted);
        assert!(!certify_step(f64::INFINITY, &a, &b, 0.5, 2.0).accepted);
        // Zero step leaves no budget at all.
        assert!(!certify_step(1e-30, &a, &a, 0.5, 2.0).accepted);
        assert!(certify_step(0.0, &a, &a, 0.5, 2.0).accepted);
    }
}
