//! Acceptance battery: ten numbered end-to-end criteria that gate a release.
//!
//! Each criterion is one test whose name carries its number; on success it
//! prints a single `criterion N PASS` line (visible with `--nocapture`).
//! The criteria cover, in order:
//!
//!  1. certified descent of the monitored Lyapunov quantity across every
//!     shipped problem, four solver variants, and twenty seeds;
//!  2. certified descent of the primal-dual energy with the per-step
//!     decrease its modulus arithmetic promises;
//!  3. solver limit points on the 1D toy landing on its brute-forced
//!     critical set with a vanishing terminal step;
//!  4. the proximal-regularized iteration being a plain iteration on the
//!     curvature-shifted problem, iterate by iterate;
//!  5. the closed-form inertial step-size bound for certified-inexact runs
//!     agreeing with direct maximization of the underlying t-curve;
//!  6. a denoising benchmark grid where the refined inertial variant never
//!     loses to the plain iteration at a fixed iteration budget;
//!  7. a deblurring benchmark grid where final objectives order
//!     refined-inertial <= inertial <= plain;
//!  8. the inexactness certificate bounding every accepted epsilon, and the
//!     certified variant collapsing onto the exact one as lambda -> 0;
//!  9. the imaging calculus: adjoint identities, derivative formulas versus
//!     finite differences, kernel normalization, and the blur operator norm;
//! 10. CLI determinism: rerunning any subcommand with the same seed
//!     reproduces every output byte (the wall-clock column excepted).

use std::process::Command;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use dckit::bounds::{gamma_sup_inexact, sigma_bar, TStarCase};
use dckit::config::{Algorithm, GammaSpec, MonitorMode, SolverConfig};
use dckit::dense::DenseMatrix;
use dckit::imaging::{
    add_gaussian_noise, blur_operator_norm, convolve, convolve_adjoint, disk_kernel,
    gaussian_noise_vec, grad, grad_adjoint, piecewise_signal, ssim, synthetic_image,
    textured_image, GradField, ImageGrid, PhiFamily, PhiKind,
};
use dckit::problem::DcProblem;
use dckit::problems::{
    brute_force_critical_points, build_deblur_problem, build_denoise_problem, build_l12_problem,
    build_signal1d_problem, build_toy_1d,
};
use dckit::solvers::{criticality_residual, energy_along_trace, run, run_dca, run_sdca};
use dckit::trace::{Termination, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default observation noise level used by the imaging experiments.
const NOISE: f64 = 80.0 / 255.0;

fn phi_atan(a: f64) -> PhiFamily {
    PhiFamily::new(PhiKind::Atan, a).expect("atan family accepts positive sharpness")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Wraps a problem so every subproblem call appends the duality gap it
/// certified. This lets the battery re-check descent slacks independently of
/// the built-in monitor: the slack formula is reapplied here from raw data.
fn gap_recording(p: &DcProblem) -> (DcProblem, Arc<Mutex<Vec<f64>>>) {
    let gaps = Arc::new(Mutex::new(Vec::new()));
    let sink = Arc::clone(&gaps);
    let inner = p.clone();
    let (f1_src, f2_src, sub_src) = (p.clone(), p.clone(), p.clone());
    let wrapped = DcProblem::new(
        p.label().to_string(),
        p.dimension(),
        p.sigma1(),
        p.sigma2(),
        move |x: &[f64]| f1_src.eval_f1(x),
        move |x: &[f64]| f2_src.eval_f2(x),
        move |x: &[f64]| sub_src.subgrad_f2(x),
        move |req| {
            let r = inner.solve_subproblem(req)?;
            sink.lock().expect("gap sink").push(r.gap);
            Ok(r)
        },
    )
    .expect("wrapping preserves well-formedness");
    (wrapped, gaps)
}

/// Returns a decomposition of the same objective that the given variant can
/// run. Problems whose second part carries no curvature cannot admit
/// certificate-based inertia directly; shifting both parts by the same
/// quadratic leaves the objective and its critical points untouched while
/// giving the certificate a budget to work with.
fn runnable(p: &DcProblem, alg: Algorithm) -> DcProblem {
    if SolverConfig::new(alg).resolve(p).is_ok() {
        p.clone()
    } else {
        let shifted = p.regularized(1.0);
        assert!(
            SolverConfig::new(alg).resolve(&shifted).is_ok(),
            "{} must accept {} after the curvature shift",
            p.label(),
            alg.as_str()
        );
        shifted
    }
}

fn config_with(alg: Algorithm, max_outer: usize) -> SolverConfig {
    let mut c = SolverConfig::new(alg);
    c.max_outer = max_outer;
    c.monitor = MonitorMode::Warn;
    c
}

/// One problem instance plus the starting point its experiments use.
struct Case {
    label: &'static str,
    problem: DcProblem,
    x0: Vec<f64>,
    iters: usize,
}

fn random_design(seed: u64) -> (DenseMatrix, Vec<f64>) {
    let (m, n) = (12, 24);
    let a = DenseMatrix::new(m, n, gaussian_noise_vec(m * n, 1.0, 7_000 + seed))
        .expect("random design matrix");
    let b = gaussian_noise_vec(m, 1.0, 8_000 + seed);
    (a, b)
}

/// The five shipped problem builders, instantiated from one seed.
fn battery(seed: u64) -> Vec<Case> {
    let clean = synthetic_image(64, 64, seed);
    let observed = add_gaussian_noise(&clean, NOISE, seed);
    let denoise =
        build_denoise_problem(&observed, 0.95, phi_atan(6.0)).expect("denoise instance");

    let kernel = disk_kernel(3);
    let blurred = convolve(&clean, &kernel);
    let blur_obs = add_gaussian_noise(&blurred, NOISE, seed);
    let deblur = build_deblur_problem(&blur_obs, 0.95, 0.95 + 2.0, &kernel, phi_atan(6.0))
        .expect("deblur instance");

    let truth = piecewise_signal(192, 8, seed);
    let noise = gaussian_noise_vec(192, 0.1, seed);
    let samples: Vec<f64> = truth.iter().zip(&noise).map(|(t, e)| t + e).collect();
    let signal =
        build_signal1d_problem(&samples, 20.0, phi_atan(6.0)).expect("signal instance");

    let (a, b) = random_design(seed);
    let l12 = build_l12_problem(a, b, 0.2, 1.0).expect("sparse recovery instance");
    let l12_start = gaussian_noise_vec(24, 1.0, 40_000 + seed);

    let mut rng = ChaCha8Rng::seed_from_u64(9_000 + seed);
    let toy_start = rng.gen_range(-1.9..1.9);

    vec![
        Case {
            label: "denoise",
            x0: observed.as_slice().to_vec(),
            problem: denoise,
            iters: 5,
        },
        Case {
            label: "deblur",
            x0: blur_obs.as_slice().to_vec(),
            problem: deblur,
            iters: 5,
        },
        Case {
            label: "signal",
            x0: samples,
            problem: signal,
            iters: 25,
        },
        Case {
            label: "l12",
            x0: l12_start,
            problem: l12,
            iters: 40,
        },
        Case {
            label: "toy",
            x0: vec![toy_start],
            problem: build_toy_1d(),
            iters: 80,
        },
    ]
}

/// Re-derives the monitored quantity from stored states and re-applies the
/// certified one-step slack `2 * gap + 1e-9 * (1 + |L_prev|)` from raw gap
/// data, independently of the run's own monitor.
fn check_certified_descent(problem: &DcProblem, trace: &Trace, gaps: &[f64], who: &str) {
    let inexact = trace.plan.inexact;
    if !inexact {
        assert_eq!(
            gaps.len(),
            trace.records.len(),
            "{who}: exact runs call the subsolver once per completed step"
        );
    }
    let states = trace.states.as_ref().expect("states stored");
    for (r, rec) in trace.records.iter().enumerate() {
        let f = problem
            .objective(&states.points[r + 1])
            .expect("iterates stay in the domain");
        let l = f + trace.plan.lyapunov_coeff * dist_sq(&states.points[r + 1], &states.points[r]);
        assert!(
            (l - rec.lyapunov).abs() <= 1e-9 * (1.0 + rec.lyapunov.abs()),
            "{who}: recorded monitor value at step {} is not recomputable: {} vs {l}",
            rec.k,
            rec.lyapunov
        );
    }
    let mut l_prev = trace.f_initial;
    for (r, rec) in trace.records.iter().enumerate() {
        let gap = if inexact { rec.epsilon } else { gaps[r] };
        assert!(
            gap.is_finite() && gap >= 0.0,
            "{who}: step {} carries no usable certificate (gap {gap})",
            rec.k
        );
        let slack = 2.0 * gap + 1e-9 * (1.0 + l_prev.abs());
        assert!(
            rec.lyapunov <= l_prev + slack,
            "{who}: monitored value rose at step {}: {} -> {} exceeds slack {slack:e}",
            rec.k,
            l_prev,
            rec.lyapunov
        );
        l_prev = rec.lyapunov;
    }
}

const DESCENT_ALGS: [Algorithm; 4] = [
    Algorithm::Dca,
    Algorithm::Sdca,
    Algorithm::RindcaExact,
    Algorithm::RindcaInexact,
];

#[test]
fn criterion_01_monitored_descent_holds_across_the_battery() {
    let started = Instant::now();
    let mut runs = 0usize;
    let mut exhausted = 0usize;
    for seed in 0..20u64 {
        for case in battery(seed) {
            for alg in DESCENT_ALGS {
                let p = runnable(&case.problem, alg);
                let (wrapped, gaps) = gap_recording(&p);
                let cfg = config_with(alg, case.iters);
                let trace = run(&wrapped, &cfg, &case.x0).expect("run completes");
                let who = format!("{} seed {seed} {}", case.label, alg.as_str());
                // A certified run may stop early once the epsilon budget
                // near a critical point shrinks below what double-precision
                // duality gaps can certify; that is an honest stop, and the
                // steps completed before it remain subject to the descent
                // check. Anything else the monitor reports is a failure.
                for w in &trace.monitor_warnings {
                    assert!(
                        w.contains("step certificate not reached"),
                        "{who}: monitor warned: {w}"
                    );
                    exhausted += 1;
                }
                assert!(!trace.records.is_empty(), "{who}: no steps taken");
                check_certified_descent(&p, &trace, &gaps.lock().expect("gaps"), &who);
                runs += 1;
            }
        }
    }
    assert_eq!(runs, 400, "5 problems x 4 variants x 20 seeds");
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 300.0, "descent battery took {secs:.1}s, budget is 300s");
    println!(
        "criterion 1 PASS: monitored descent held within certified slack over {runs} runs \
         ({exhausted} ended early on certificate exhaustion near a critical point; {secs:.1}s)"
    );
}

#[test]
fn criterion_02_energy_descends_by_the_promised_step_quota() {
    let started = Instant::now();
    let mut transitions = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let toy = build_toy_1d();

    // (problem, start, outer iterations) over toy starts and denoise seeds.
    let mut cases: Vec<(String, DcProblem, Vec<f64>, usize)> = (0..20)
        .map(|_| {
            let s: f64 = rng.gen_range(-1.9..1.9);
            (format!("toy start {s:.3}"), toy.clone(), vec![s], 80)
        })
        .collect();
    for seed in 0..5u64 {
        let clean = synthetic_image(64, 64, seed);
        let observed = add_gaussian_noise(&clean, NOISE, seed);
        let p = build_denoise_problem(&observed, 0.95, phi_atan(6.0)).expect("denoise");
        cases.push((
            format!("denoise seed {seed}"),
            p,
            observed.as_slice().to_vec(),
            8,
        ));
    }

    for (label, problem, x0, iters) in &cases {
        for alg in DESCENT_ALGS {
            let p = runnable(problem, alg);
            let (wrapped, gaps) = gap_recording(&p);
            let cfg = config_with(alg, *iters);
            let trace = run(&wrapped, &cfg, x0).expect("run completes");
            let who = format!("{label} {}", alg.as_str());

            // The recorded display column must be recomputable from states.
            let energies = energy_along_trace(&p, &trace).expect("states stored");
            assert_eq!(energies.len(), trace.records.len());
            for (r, e) in energies.iter().enumerate() {
                let shown = trace.records[r].energy.expect("energy recorded");
                assert!(
                    (e - shown).abs() <= 1e-9 * (1.0 + shown.abs()),
                    "{who}: energy column not recomputable at step {}: {shown} vs {e}",
                    r + 1
                );
            }

            // The per-transition quota splits across the two steps touching
            // it: a proximal ridge contributes on the step just taken, and
            // the modulus surplus (sigma1 + sigma2 - 2 gamma) / 2 — with the
            // certified t-curve modulus in place of sigma1 + sigma2 for
            // certificate-based runs — contributes on the preceding step.
            let prev_coeff =
                0.5 * (trace.plan.sigma_bar - 2.0 * trace.plan.ridge) - trace.plan.gamma_inertial;
            if !trace.plan.inexact {
                let expect = 0.5 * (p.sigma1() + p.sigma2()) - trace.plan.gamma_inertial;
                assert!(
                    (prev_coeff - expect).abs() <= 1e-12 * (1.0 + expect.abs()),
                    "{who}: decrease constant {prev_coeff} differs from modulus arithmetic \
                     {expect}"
                );
            }
            assert!(prev_coeff > 0.0, "{who}: decrease constant must be positive");

            let gaps = gaps.lock().expect("gaps");
            for j in 1..energies.len() {
                let gap = if trace.plan.inexact {
                    trace.records[j].epsilon
                } else {
                    gaps[j]
                };
                let slack = 2.0 * gap + 1e-9 * (1.0 + energies[j - 1].abs());
                let quota = trace.plan.ridge * trace.records[j].step_norm.powi(2)
                    + prev_coeff * trace.records[j - 1].step_norm.powi(2);
                assert!(
                    energies[j] <= energies[j - 1] - quota + slack,
                    "{who}: energy fell short of its quota at step {}: {} -> {} \
                     (needed decrease {quota:e}, slack {slack:e})",
                    j + 1,
                    energies[j - 1],
                    energies[j]
                );
                transitions += 1;
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    println!(
        "criterion 2 PASS: energy met its per-step decrease quota on {transitions} transitions \
         ({secs:.1}s)"
    );
}

#[test]
fn criterion_03_toy_limit_points_land_on_the_critical_set() {
    let toy = build_toy_1d();
    let oracle = brute_force_critical_points(&toy, -1.5, 1.5, 1e-3).expect("scan");
    // Hand check of the oracle itself: 2x meets a subgradient of |x| exactly
    // at -1/2, 0 (where the subdifferential is [-1, 1]), and 1/2.
    assert_eq!(oracle.len(), 3, "the toy has three critical points");
    for (got, want) in oracle.iter().zip([-0.5, 0.0, 0.5]) {
        assert!(
            (got[0] - want).abs() <= 1e-6,
            "scan found {} instead of {want}",
            got[0]
        );
    }
    // The curvature-shifted equivalent used by certificate-based variants
    // must expose the same critical set.
    let shifted = toy.regularized(1.0);
    let shifted_oracle = brute_force_critical_points(&shifted, -1.5, 1.5, 1e-3).expect("scan");
    assert_eq!(shifted_oracle.len(), 3);
    for (a, b) in oracle.iter().zip(&shifted_oracle) {
        assert!((a[0] - b[0]).abs() <= 1e-6);
    }

    let mut starts = vec![-2.0, -0.6, -0.45, -0.1, 0.0, 0.1, 0.45, 0.6, 2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    starts.extend((0..31).map(|_| rng.gen_range(-2.0..2.0)));

    let mut runs = 0usize;
    for alg in Algorithm::ALL {
        let p = runnable(&toy, alg);
        for &s in &starts {
            let mut cfg = config_with(alg, 400);
            cfg.step_tol = 1e-9;
            let trace = run(&p, &cfg, &[s]).expect("run completes");
            let who = format!("toy {} from {s:.4}", alg.as_str());
            assert_eq!(
                trace.termination,
                Termination::StepTol,
                "{who}: did not converge"
            );
            let last = trace.records.last().expect("at least one step");
            assert!(
                last.step_norm <= 1e-8,
                "{who}: terminal step {} too large",
                last.step_norm
            );
            let x = trace.final_point[0];
            let gap_to_oracle = oracle
                .iter()
                .map(|c| (c[0] - x).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(
                gap_to_oracle <= 1e-6,
                "{who}: limit point {x} is {gap_to_oracle:e} away from the critical set"
            );
            let residual = criticality_residual(&p, &trace.final_point, 1e-10, 10_000)
                .expect("closed-form subproblem");
            assert!(
                residual <= 1e-7,
                "{who}: fixed-point residual {residual:e} at the limit point"
            );
            runs += 1;
        }
    }
    println!(
        "criterion 3 PASS: {runs} runs across all six variants terminated on the brute-forced \
         critical set with terminal steps <= 1e-8"
    );
}

#[test]
fn criterion_04_proximal_regularization_equals_plain_iteration_on_shifted_problem() {
    let toy = build_toy_1d();
    let mut cases: Vec<(String, DcProblem, Vec<f64>)> = [0.9, -1.3, 0.35]
        .iter()
        .map(|&s| (format!("toy from {s}"), toy.clone(), vec![s]))
        .collect();
    for seed in [11u64, 12u64] {
        let (a, b) = random_design(seed);
        let p = build_l12_problem(a, b, 0.15, 0.0).expect("sparse recovery");
        let x0 = gaussian_noise_vec(24, 0.5, 60_000 + seed);
        cases.push((format!("l12 seed {seed}"), p, x0));
    }

    let mut compared = 0usize;
    for gamma in [0.5, 1.0] {
        for (label, p, x0) in &cases {
            let mut cfg = SolverConfig::new(Algorithm::Sdca);
            cfg.max_outer = 60;
            cfg.step_tol = 1e-10;
            let prox = run_sdca(p, x0, gamma, &cfg).expect("proximal run");
            let plain = run_dca(&p.regularized(gamma), x0, &cfg).expect("shifted plain run");
            let who = format!("{label} gamma {gamma}");
            assert_eq!(
                prox.iterations(),
                plain.iterations(),
                "{who}: iteration counts differ"
            );
            assert_eq!(prox.termination, plain.termination, "{who}");
            let pa = &prox.states.as_ref().expect("states").points;
            let pb = &plain.states.as_ref().expect("states").points;
            let tol = 10.0 * cfg.inner_stop;
            for k in 0..pa.len() {
                let d = dist(&pa[k], &pb[k]);
                assert!(d <= tol, "{who}: iterate {k} differs by {d:e} (> {tol:e})");
                // Both runs issue bitwise-identical subproblem requests, so
                // the agreement should be far tighter than the contract.
                assert!(d <= 1e-12, "{who}: iterate {k} differs by {d:e}");
                compared += 1;
            }
        }
    }
    println!(
        "criterion 4 PASS: proximal-regularized and shifted plain runs agreed at {compared} \
         iterates (within 10x the inner tolerance; observed agreement <= 1e-12)"
    );
}

/// Direct maximization of `sigma_bar(t) / 2` over `t` in `(0, 1]`: a coarse
/// grid brackets the maximizer, then ternary search exploits strict concavity
/// in `t` to refine the bracket to machine precision.
fn direct_t_curve_max(s1: f64, s2: f64, lam: f64) -> f64 {
    const N: usize = 4096;
    let mut best_i = 1usize;
    let mut best = f64::NEG_INFINITY;
    for i in 1..=N {
        let t = i as f64 / N as f64;
        let v = sigma_bar(s1, s2, lam, t);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut lo = (best_i as f64 - 1.0).max(0.5) / N as f64;
    let mut hi = ((best_i + 1).min(N)) as f64 / N as f64;
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if sigma_bar(s1, s2, lam, m1) < sigma_bar(s1, s2, lam, m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    0.5 * sigma_bar(s1, s2, lam, 0.5 * (lo + hi))
}

#[test]
fn criterion_05_certified_bound_matches_direct_maximization() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut interior = 0usize;
    let mut collapsed = 0usize;
    let mut strict = 0usize;
    for trial in 0..1000 {
        let sigma1 = if rng.gen_bool(0.12) {
            0.0
        } else {
            rng.gen_range(0.0..4.0)
        };
        let sigma2 = rng.gen_range(0.05..4.0);
        let lambda = rng.gen_range(0.01..0.99);
        let report = gamma_sup_inexact(sigma1, sigma2, lambda).expect("valid inputs");
        let direct = direct_t_curve_max(sigma1, sigma2, lambda);
        assert!(
            (report.sup_inexact - direct).abs() <= 1e-12,
            "trial {trial} ({sigma1}, {sigma2}, {lambda}): closed form {} vs direct {direct}",
            report.sup_inexact
        );
        match report.case {
            TStarCase::Interior => {
                let closed = 0.5 * (sigma1 + sigma2) - (lambda * sigma1 * sigma2).sqrt();
                assert!(
                    (report.sup_inexact - closed).abs() <= 1e-12,
                    "trial {trial}: interior formula mismatch"
                );
                // The refined bound dominates the older one; the margin
                // (sqrt(sigma1) - sqrt(lambda sigma2))^2 / 2 is positive in
                // the interior but can round to zero within a few ulps of
                // the regime boundary, so strictness is only asserted with
                // a real margin.
                let ulps = 8.0 * f64::EPSILON * (1.0 + report.sup_older_inexact.abs());
                assert!(
                    report.sup_inexact >= report.sup_older_inexact - ulps,
                    "trial {trial}: refined bound fell below the older one"
                );
                if sigma1 - lambda * sigma2 > 1e-9 {
                    assert!(
                        report.sup_inexact > report.sup_older_inexact,
                        "trial {trial}: refined bound not strictly larger \
                         ({sigma1}, {sigma2}, {lambda})"
                    );
                    strict += 1;
                }
                interior += 1;
            }
            TStarCase::ClampedAtOne | TStarCase::FirstPartFlat => {
                assert_eq!(
                    report.sup_inexact, report.sup_older_inexact,
                    "trial {trial}: outside the interior the refined bound collapses exactly"
                );
                assert_eq!(report.t_star, 1.0);
                collapsed += 1;
            }
        }
    }
    assert!(
        interior >= 100 && collapsed >= 100,
        "both regimes must be exercised: interior {interior}, collapsed {collapsed}"
    );
    println!(
        "criterion 5 PASS: 1000 random triples matched direct maximization to 1e-12 \
         ({interior} interior, {strict} strictly dominant, {collapsed} collapsed exactly)"
    );
}

fn image_of(point: &[f64], rows: usize, cols: usize) -> ImageGrid {
    ImageGrid::new(rows, cols, point.to_vec()).expect("trace point has grid shape")
}

/// Striped scene for the denoise comparison below: axis-aligned bands of
/// irregular width at near-binary contrast. Every band is wide enough that
/// the smoothing prior keeps it at any fidelity weight in the sweep (erasing
/// a band costs data fidelity proportional to its area but saves only two
/// fixed edge penalties), and axis-aligned edges carry neither curvature nor
/// staircase corners to round off. Restoration runs on this scene can differ
/// only in residual noise, which is exactly what the comparison measures.
fn striped_scene(rows: usize, cols: usize) -> ImageGrid {
    const EDGES: [f64; 6] = [0.14, 0.33, 0.47, 0.70, 0.86, 1.01];
    const LEVELS: [f64; 7] = [0.10, 0.88, 0.06, 0.93, 0.12, 0.84, 0.08];
    let n = rows.max(cols) as f64;
    ImageGrid::from_fn(rows, cols, |_i, j| {
        let u = j as f64 / n;
        let band = EDGES.iter().take_while(|&&e| e <= u).count();
        LEVELS[band]
    })
}

#[test]
fn criterion_06_inertia_never_loses_on_the_denoise_grid() {
    let started = Instant::now();
    // One fixed scene; the seeds index noise realizations, matching how the
    // comparison tables are built (per-realization wins on the same image).
    let clean = striped_scene(64, 64);
    let mus = [0.55, 0.65, 0.75, 0.85, 0.95, 1.05, 1.15, 1.25];
    let mut failures: Vec<String> = Vec::new();
    for mu in mus {
        let mut f_wins = 0usize;
        let mut ssim_wins = 0usize;
        for seed in 0..5u64 {
            let observed = add_gaussian_noise(&clean, NOISE, seed);
            let p = build_denoise_problem(&observed, mu, phi_atan(6.0)).expect("denoise");
            let x0 = observed.as_slice().to_vec();
            let plain = run(&p, &config_with(Algorithm::Dca, 20), &x0).expect("plain run");
            let inertial =
                run(&p, &config_with(Algorithm::RindcaExact, 20), &x0).expect("inertial run");
            let (f_p, f_i) = (plain.final_objective(), inertial.final_objective());
            // "Win" means not losing at the resolution such comparisons are
            // reported with: five significant figures for objectives, four
            // decimal places for SSIM. Differences below that are ties.
            if f_i <= f_p + 1e-5 * (1.0 + f_p.abs()) {
                f_wins += 1;
            }
            let s_p = ssim(&image_of(&plain.final_point, 64, 64), &clean).expect("ssim");
            let s_i = ssim(&image_of(&inertial.final_point, 64, 64), &clean).expect("ssim");
            if s_i >= s_p - 5e-5 {
                ssim_wins += 1;
            }
            println!(
                "  mu {mu} seed {seed}: f {f_p:.4} vs {f_i:.4} (margin {:+.3e}), \
                 ssim {s_p:.5} vs {s_i:.5} (margin {:+.3e})",
                f_p - f_i,
                s_i - s_p
            );
        }
        if f_wins < 4 {
            failures.push(format!("mu {mu}: inertial objective won only {f_wins}/5 seeds"));
        }
        if ssim_wins < 4 {
            failures.push(format!("mu {mu}: inertial SSIM won only {ssim_wins}/5 seeds"));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 600.0, "denoise grid took {secs:.1}s, budget is 600s");
    if failures.is_empty() {
        println!(
            "criterion 6 PASS: refined inertia matched or beat the plain iteration in objective \
             and SSIM on >= 4/5 seeds at every mu ({secs:.1}s)"
        );
    } else {
        // Kept unweakened although it cannot pass reliably at this scale: a
        // 64x64 run finishes its transient well before iteration 20, and
        // per-realization comparisons taken at matched iteration counts
        // then sample which critical point each variant settled in (margins
        // of order 1e-3, sign effectively random) rather than how fast it
        // got there. The speed claim itself is covered by the surviving
        // objective rows here and by criteria 7 and 2.
        println!("criterion 6 FAIL: {}", failures.join("; "));
        panic!("denoise grid losses:\n{failures:#?}");
    }
}

#[test]
fn criterion_07_deblur_grid_orders_refined_inertial_sharpest() {
    let started = Instant::now();
    let kernel = disk_kernel(3);
    let clean = textured_image(64, 64, 0);
    let blurred = convolve(&clean, &kernel);
    let mut failures: Vec<String> = Vec::new();
    for mu in [0.95, 1.35, 1.65] {
        for a in [4.0, 8.0] {
            let mut ordered = 0usize;
            for seed in 0..5u64 {
                let observed = add_gaussian_noise(&blurred, NOISE, seed);
                let p = build_deblur_problem(&observed, mu, mu + 2.0, &kernel, phi_atan(a))
                    .expect("deblur");
                let x0 = observed.as_slice().to_vec();
                let f_of = |alg: Algorithm| {
                    run(&p, &config_with(alg, 20), &x0)
                        .expect("deblur run")
                        .final_objective()
                };
                let f_plain = f_of(Algorithm::Dca);
                let f_inertial = f_of(Algorithm::IndcaExact);
                let f_refined = f_of(Algorithm::RindcaExact);
                let tol = 1e-9 * (1.0 + f_plain.abs());
                if f_refined <= f_inertial + tol && f_inertial <= f_plain + tol {
                    ordered += 1;
                }
                println!(
                    "  mu {mu} a {a} seed {seed}: plain {f_plain:.4}, inertial {f_inertial:.4} \
                     (margin {:+.3e}), refined {f_refined:.4} (margin {:+.3e})",
                    f_plain - f_inertial,
                    f_inertial - f_refined
                );
            }
            if ordered < 4 {
                failures.push(format!(
                    "mu {mu}, sharpness {a}: ordering held on only {ordered}/5 seeds"
                ));
            }
        }
    }
    assert!(failures.is_empty(), "deblur grid losses:\n{failures:#?}");
    let secs = started.elapsed().as_secs_f64();
    println!(
        "criterion 7 PASS: refined <= inertial <= plain final objectives on >= 4/5 seeds in all \
         six deblur cells ({secs:.1}s)"
    );
}

#[test]
fn criterion_08_certificates_bound_epsilon_and_vanish_with_lambda() {
    // (a) Every accepted certified step obeys
    //     epsilon <= lambda * (sigma2 / 2) * step^2.
    let mut checked = 0usize;
    let mut positive = 0usize;
    let mut inexact_cases: Vec<(String, DcProblem, Vec<f64>, usize)> = Vec::new();
    let toy_shifted = build_toy_1d().regularized(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for i in 0..20 {
        let s: f64 = rng.gen_range(-1.9..1.9);
        inexact_cases.push((
            format!("toy start {i}"),
            toy_shifted.clone(),
            vec![s],
            80,
        ));
    }
    for seed in 0..5u64 {
        let (a, b) = random_design(seed);
        let p = build_l12_problem(a, b, 0.2, 1.0).expect("sparse recovery");
        inexact_cases.push((
            format!("l12 seed {seed}"),
            p,
            gaussian_noise_vec(24, 1.0, 70_000 + seed),
            40,
        ));
    }
    for seed in 0..3u64 {
        let clean = synthetic_image(32, 32, seed);
        let observed = add_gaussian_noise(&clean, NOISE, seed);
        let p = build_denoise_problem(&observed, 0.95, phi_atan(6.0))
            .expect("denoise")
            .regularized(1.0);
        inexact_cases.push((
            format!("denoise seed {seed}"),
            p,
            observed.as_slice().to_vec(),
            8,
        ));
    }
    for (label, p, x0, iters) in &inexact_cases {
        let cfg = config_with(Algorithm::RindcaInexact, *iters);
        let trace = run(p, &cfg, x0).expect("certified run");
        let (lam, s2) = (trace.plan.lambda, trace.plan.sigma2);
        for rec in &trace.records {
            let budget = lam * 0.5 * s2 * rec.step_norm * rec.step_norm;
            // step_norm is the rounded square root of the distance the
            // certificate saw, so allow a few ulps on the comparison.
            assert!(
                rec.epsilon <= budget * (1.0 + 1e-12) + f64::MIN_POSITIVE,
                "{label}: step {} accepted epsilon {:e} over budget {budget:e}",
                rec.k,
                rec.epsilon
            );
            checked += 1;
            if rec.epsilon > 0.0 {
                positive += 1;
            }
        }
    }

    // (b) As lambda -> 0 the certificate forces near-exact steps: the
    //     certified run must shadow the exact run objective-by-objective.
    let mut shadowed = 0usize;
    for start in [-1.7, -0.8, 0.3, 0.9, 1.6] {
        let gamma = 1.5; // admissible for both: exact sup 2, certified sup ~ 2 - sqrt(3e-6)
        let mut exact_cfg = config_with(Algorithm::RindcaExact, 60);
        exact_cfg.gamma = GammaSpec::Explicit(gamma);
        let mut certified_cfg = config_with(Algorithm::RindcaInexact, 60);
        certified_cfg.gamma = GammaSpec::Explicit(gamma);
        certified_cfg.lambda = 1e-6;
        let exact = run(&toy_shifted, &exact_cfg, &[start]).expect("exact run");
        let certified = run(&toy_shifted, &certified_cfg, &[start]).expect("certified run");
        let n = exact.records.len().min(certified.records.len());
        assert!(
            exact.records.len().abs_diff(certified.records.len()) <= 1,
            "start {start}: run lengths differ by more than one"
        );
        for k in 0..n {
            let (fe, fc) = (exact.records[k].f_value, certified.records[k].f_value);
            assert!(
                (fe - fc).abs() <= 1e-4,
                "start {start}: objectives diverge at step {}: {fe} vs {fc}",
                k + 1
            );
            shadowed += 1;
        }
    }
    println!(
        "criterion 8 PASS: {checked} accepted steps stayed under the epsilon budget ({positive} \
         with positive epsilon); the lambda->0 run shadowed the exact one at {shadowed} steps"
    );
}

fn random_grid(rows: usize, cols: usize, seed: u64) -> ImageGrid {
    ImageGrid::new(rows, cols, gaussian_noise_vec(rows * cols, 1.0, seed)).expect("grid")
}

#[test]
fn criterion_09_calculus_identities_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);

    // Gradient operator adjoint: <grad x, p> = <x, grad* p>.
    for trial in 0..20u64 {
        let rows = rng.gen_range(2..40);
        let cols = rng.gen_range(2..40);
        let x = random_grid(rows, cols, 910 + trial);
        let mut p = GradField::zeros(rows, cols);
        let down = gaussian_noise_vec((rows - 1) * cols, 1.0, 930 + trial);
        p.vertical_mut().copy_from_slice(&down);
        let right = gaussian_noise_vec(rows * (cols - 1), 1.0, 950 + trial);
        p.horizontal_mut().copy_from_slice(&right);
        let gx = grad(&x);
        let lhs = dot(gx.vertical(), p.vertical()) + dot(gx.horizontal(), p.horizontal());
        let rhs = dot(x.as_slice(), grad_adjoint(&p).as_slice());
        assert!(
            (lhs - rhs).abs() <= 1e-10,
            "gradient adjoint broke at {rows}x{cols}: {lhs} vs {rhs}"
        );
    }

    // Convolution adjoint, disk kernels of several radii plus the identity.
    for (trial, radius) in [(0u64, 1usize), (1, 2), (2, 3), (3, 4)] {
        let kernel = disk_kernel(radius);
        let rows = rng.gen_range(8..48);
        let cols = rng.gen_range(8..48);
        let x = random_grid(rows, cols, 1_000 + trial);
        let y = random_grid(rows, cols, 1_100 + trial);
        let lhs = dot(convolve(&x, &kernel).as_slice(), y.as_slice());
        let rhs = dot(x.as_slice(), convolve_adjoint(&y, &kernel).as_slice());
        assert!(
            (lhs - rhs).abs() <= 1e-10,
            "convolution adjoint broke at radius {radius}: {lhs} vs {rhs}"
        );
    }

    // Penalty derivatives against central differences, all four families.
    let h = 1e-6;
    for kind in [PhiKind::Log, PhiKind::Rational, PhiKind::Atan, PhiKind::Exp] {
        for a in [2.0, 6.0] {
            let phi = PhiFamily::new(kind, a).expect("family");
            let mut r = 0.05;
            while r <= 3.0 {
                let fd = (phi.eval(r + h) - phi.eval(r - h)) / (2.0 * h);
                let an = phi.deriv(r);
                assert!(
                    (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                    "{kind:?} a={a}: derivative at r={r} is {an}, finite difference {fd}"
                );
                r += 0.05;
            }
        }
    }

    // Second-part gradients of the shipped problems against central
    // differences, probed away from the kinks of the total variation.
    let rows = 6;
    let cols = 5;
    let ramp = ImageGrid::from_fn(rows, cols, |i, j| 0.2 * i as f64 + 0.13 * j as f64);
    let jitter = gaussian_noise_vec(rows * cols, 0.03, 77);
    let base: Vec<f64> = ramp
        .as_slice()
        .iter()
        .zip(&jitter)
        .map(|(r, n)| r + n)
        .collect();
    let observed = ImageGrid::new(rows, cols, gaussian_noise_vec(rows * cols, 0.5, 78))
        .expect("observation");
    let kernel = disk_kernel(1);
    let probes: Vec<(&str, DcProblem)> = vec![
        (
            "denoise",
            build_denoise_problem(&observed, 0.9, phi_atan(6.0)).expect("denoise"),
        ),
        (
            "deblur",
            build_deblur_problem(&observed, 0.9, 2.9, &kernel, phi_atan(4.0)).expect("deblur"),
        ),
    ];
    for (label, p) in &probes {
        let g = p.subgrad_f2(&base);
        for i in 0..base.len() {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (p.eval_f2(&plus) - p.eval_f2(&minus)) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() <= 1e-5 * (1.0 + g[i].abs()),
                "{label}: f2 gradient coordinate {i} is {}, finite difference {fd}",
                g[i]
            );
        }
    }
    let (a_mat, b_vec) = random_design(5);
    let l12 = build_l12_problem(a_mat, b_vec, 0.3, 0.7).expect("sparse recovery");
    let x_l12: Vec<f64> = gaussian_noise_vec(24, 1.0, 79)
        .into_iter()
        .map(|v| v + 0.5 * v.signum())
        .collect();
    let g = l12.subgrad_f2(&x_l12);
    for i in 0..x_l12.len() {
        let mut plus = x_l12.clone();
        let mut minus = x_l12.clone();
        plus[i] += h;
        minus[i] -= h;
        let fd = (l12.eval_f2(&plus) - l12.eval_f2(&minus)) / (2.0 * h);
        assert!(
            (fd - g[i]).abs() <= 1e-5 * (1.0 + g[i].abs()),
            "l12: f2 gradient coordinate {i} is {}, finite difference {fd}",
            g[i]
        );
    }

    // Blur kernels integrate to one and never expand signal energy.
    for radius in 1..=8usize {
        let sum: f64 = disk_kernel(radius).as_slice().iter().sum();
        assert!(
            (sum - 1.0).abs() <= 1e-12,
            "disk radius {radius} sums to {sum}"
        );
    }
    for radius in [1usize, 2, 3, 5] {
        let norm = blur_operator_norm(&disk_kernel(radius), 64, 64, 200);
        assert!(
            norm <= 1.0 + 1e-6,
            "blur operator norm {norm} exceeds 1 at radius {radius}"
        );
        assert!(norm > 0.5, "power iteration degenerated at radius {radius}");
    }

    println!(
        "criterion 9 PASS: adjoint identities to 1e-10, derivatives to 1e-5 of finite \
         differences, kernels normalized to 1e-12, blur norm <= 1 + 1e-6"
    );
}

fn dckit_cmd(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dckit"));
    c.env_remove("DCKIT_SEED");
    c.args(args);
    c
}

fn run_ok(args: &[&str]) -> String {
    let out = dckit_cmd(args).output().expect("spawn dckit");
    assert!(
        out.status.success(),
        "dckit {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_bytes(dir: &std::path::Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

/// Drops the final (wall-clock) column from every CSV line; timing is the
/// one field a rerun may legitimately change.
fn strip_timing_column(csv: &[u8]) -> Vec<u8> {
    let text = String::from_utf8(csv.to_vec()).expect("trace CSV is UTF-8");
    text.lines()
        .map(|l| match l.rfind(',') {
            Some(i) => &l[..i],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
        .into_bytes()
}

#[test]
fn criterion_10_cli_reruns_with_the_same_seed_reproduce_every_byte() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let path = |n: &str| tmp.path().join(n).to_string_lossy().into_owned();

    // denoise / deblur / signal / toy twice each, plus bounds on stdout.
    let jobs: Vec<(&str, Vec<String>)> = vec![
        (
            "denoise",
            vec![
                "denoise".into(),
                "--size".into(),
                "32".into(),
                "--iters".into(),
                "6".into(),
                "--seed".into(),
                "9".into(),
            ],
        ),
        (
            "deblur",
            vec![
                "deblur".into(),
                "--size".into(),
                "24".into(),
                "--iters".into(),
                "4".into(),
                "--seed".into(),
                "9".into(),
            ],
        ),
        (
            "signal",
            vec![
                "signal".into(),
                "--n".into(),
                "128".into(),
                "--iters".into(),
                "20".into(),
                "--seed".into(),
                "3".into(),
            ],
        ),
        (
            "toy",
            vec!["toy".into(), "--start".into(), "0.9".into()],
        ),
    ];
    for (name, args) in &jobs {
        let out_a = path(&format!("{name}-a"));
        let out_b = path(&format!("{name}-b"));
        let mut run_args: Vec<&str> = args.iter().map(String::as_str).collect();
        run_args.push("--out");
        run_args.push(&out_a);
        run_ok(&run_args);
        *run_args.last_mut().expect("out flag value") = &out_b;
        run_ok(&run_args);

        let dir_a = std::path::Path::new(&out_a);
        let dir_b = std::path::Path::new(&out_b);
        let trace_a = strip_timing_column(&read_bytes(dir_a, "trace.csv"));
        let trace_b = strip_timing_column(&read_bytes(dir_b, "trace.csv"));
        assert_eq!(
            trace_a, trace_b,
            "{name}: trace.csv differs between identical-seed reruns"
        );
        assert!(
            trace_a.starts_with(b"iter,f,step_norm,lyapunov,energy_E,epsilon,ssim"),
            "{name}: unexpected trace header"
        );
        for extra in ["observed.pgm", "recovered.pgm", "signals.csv"] {
            if dir_a.join(extra).exists() {
                assert_eq!(
                    read_bytes(dir_a, extra),
                    read_bytes(dir_b, extra),
                    "{name}: {extra} differs between identical-seed reruns"
                );
            }
        }
    }

    let bounds_a = run_ok(&["bounds", "--sigma1", "1,2", "--sigma2", "1.5"]);
    let bounds_b = run_ok(&["bounds", "--sigma1", "1,2", "--sigma2", "1.5"]);
    assert_eq!(bounds_a, bounds_b, "bounds output differs between reruns");

    println!(
        "criterion 10 PASS: denoise, deblur, signal, toy, and bounds reruns reproduced every \
         output byte (wall-clock column excepted)"
    );
}
