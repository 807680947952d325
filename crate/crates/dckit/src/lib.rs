//! Difference-of-convex (DC) optimization toolkit.
//!
//! A DC program minimizes `f = f1 - f2` where both parts are proper closed
//! convex functions. This crate bundles:
//!
//! * the classical DCA iteration and three accelerated variants built on it:
//!   a proximal-regularized form (`sdca`) and two inertial forms, one with
//!   exact convex subproblem solves and one that accepts certified inexact
//!   solves,
//! * admissible inertial step-size ranges derived from the strong-convexity
//!   moduli of the two parts, including the enlarged ranges that make the
//!   refined variants strictly more permissive than their predecessors,
//! * inner solvers that return duality-gap certificates so inexactness is
//!   always quantified, never assumed,
//! * runtime descent monitors (a Lyapunov sequence and a primal-dual energy)
//!   that flag violations of the theory up to the certified slack,
//! * a small imaging calculus (discrete gradients, smoothed total variation,
//!   blur kernels, SSIM, seeded noise, PGM I/O) and ready-made problem
//!   builders for denoising, deblurring, 1D signal restoration, and sparse
//!   recovery.
//!
//! Entry points: build or pick a problem from [`problems`], configure a run
//! with [`config::SolverConfig`], execute it with [`solvers::run`], and
//! inspect the returned [`trace::Trace`].

pub mod bounds;
pub mod config;
pub mod dense;
pub mod imaging;
pub mod problem;
pub mod problems;
pub mod solvers;
pub mod subsolvers;
pub mod trace;

mod vecmath;

pub use bounds::{gamma_sup_exact, gamma_sup_inexact, BoundReport};
pub use config::{Algorithm, GammaSpec, MonitorMode, SolverConfig, TChoice, ValidationReport};
pub use problem::DcProblem;
pub use solvers::{criticality_residual, energy_along_trace, run, SolverError};
pub use trace::{Termination, Trace};
