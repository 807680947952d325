//! The experiment runners behind each subcommand: build the data, build the
//! problem, resolve and validate the solver plan, run, and leave
//! `trace.csv` / `run.json` / image or signal files in the output directory.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use dckit::bounds::gamma_sup_inexact;
use dckit::config::SolverConfig;
use dckit::imaging::{
    add_gaussian_noise, convolve, disk_kernel, gaussian_noise_vec, identity_kernel, pgm_read,
    pgm_write, piecewise_signal, ssim, synthetic_image, ImageGrid, PgmError,
};
use dckit::problems::{
    brute_force_critical_points, build_deblur_problem, build_denoise_problem,
    build_signal1d_problem, build_toy_1d,
};
use dckit::trace::Trace;
use serde_json::json;

use crate::args::{BoundsJob, ImageJob, SignalJob, SolverSettings, ToyJob};
use crate::report::{jf, signals_csv, solver_json, trace_csv, write_io, write_run_json};
use crate::CliError;

fn solver_config(s: &SolverSettings) -> SolverConfig {
    let mut config = SolverConfig::new(s.algorithm);
    config.gamma = s.gamma;
    config.lambda = s.lambda;
    config.max_outer = s.max_outer;
    config.step_tol = s.step_tol;
    config.inner_stop = s.inner_stop;
    config.inner_max_iters = s.inner_max_iters;
    config
}

fn config_err(report: impl std::fmt::Display) -> CliError {
    CliError::Config(report.to_string())
}

fn violation(msg: impl Into<String>) -> CliError {
    CliError::Config(format!("violation: {}", msg.into()))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

/// Center-crops to the largest square multiple of `size` and block-averages
/// it down to `size x size`. `size = 0` keeps the native shape, and images
/// that are already at most `size` on their short side pass through
/// unchanged (no upsampling).
fn center_reduce(img: &ImageGrid, size: usize) -> ImageGrid {
    let short = img.rows().min(img.cols());
    if size == 0 || short <= size {
        return img.clone();
    }
    let factor = short / size;
    let crop = size * factor;
    let i0 = (img.rows() - crop) / 2;
    let j0 = (img.cols() - crop) / 2;
    let scale = 1.0 / (factor * factor) as f64;
    ImageGrid::from_fn(size, size, |i, j| {
        let mut acc = 0.0;
        for di in 0..factor {
            for dj in 0..factor {
                acc += img.get(i0 + i * factor + di, j0 + j * factor + dj);
            }
        }
        acc * scale
    })
}

fn load_clean_image(job: &ImageJob, seed: u64) -> Result<ImageGrid, CliError> {
    match &job.image {
        Some(path) => {
            let img = pgm_read(path).map_err(|e| match e {
                PgmError::Io(io) => {
                    CliError::Parse(format!("cannot read image {}: {io}", path.display()))
                }
                parse => CliError::Parse(format!("{}: {parse}", path.display())),
            })?;
            Ok(center_reduce(&img, job.size))
        }
        None => {
            if job.size < 2 {
                return Err(violation(format!(
                    "the synthetic scene needs --size of at least 2, got {}",
                    job.size
                )));
            }
            Ok(synthetic_image(job.size, job.size, seed))
        }
    }
}

fn grid_like(shape: &ImageGrid, data: &[f64]) -> ImageGrid {
    shape
        .same_shape(data.to_vec())
        .expect("solver preserves the problem dimension")
}

/// SSIM of each recorded iterate against the clean image, one value per
/// trace record.
fn ssim_per_record(trace: &Trace, clean: &ImageGrid) -> Result<Vec<f64>, CliError> {
    let states = trace
        .states
        .as_ref()
        .expect("experiment runs store states");
    states.points[1..]
        .iter()
        .map(|p| {
            ssim(&grid_like(clean, p), clean)
                .map_err(|e| CliError::Runtime(format!("ssim: {e}")))
        })
        .collect()
}

fn check_common(noise_sigma: f64, sweep: Option<usize>) -> Result<(), CliError> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(violation(format!(
            "noise sigma must be nonnegative and finite, got {noise_sigma}"
        )));
    }
    if sweep == Some(0) {
        return Err(violation("--sweep needs at least one run"));
    }
    Ok(())
}

/// Fans `n` runs out across worker threads; run `i` gets seed `base + i` and
/// output directory `out_root/run-iii`. Prints one summary line per run in
/// index order and returns the first failure, if any.
fn sweep_runs<F>(n: usize, base_seed: u64, out_root: &Path, run_one: F) -> Result<(), CliError>
where
    F: Fn(u64, &Path) -> Result<String, CliError> + Sync,
{
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<String, CliError>)>> = Mutex::new(Vec::new());
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(n);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = out_root.join(format!("run-{i:03}"));
                let r = run_one(base_seed.wrapping_add(i as u64), &out);
                results.lock().expect("sweep results").push((i, r));
            });
        }
    });
    let mut results = results.into_inner().expect("sweep results");
    results.sort_by_key(|(i, _)| *i);
    let mut first_err = None;
    for (i, r) in results {
        match r {
            Ok(line) => println!("run {i:03}: {line}"),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                } else {
                    eprintln!("run {i:03} failed: {}", e.message());
                }
            }
        }
    }
    match first_err {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

pub fn run_image_job(job: &ImageJob) -> Result<(), CliError> {
    check_common(job.noise_sigma, job.sweep)?;
    if let Some(spec) = &job.deblur {
        if !spec.identity_kernel && spec.kernel_radius == 0 {
            return Err(violation("the disk kernel needs a radius of at least 1"));
        }
    }
    match job.sweep {
        None => {
            let line = run_image_once(job, job.seed, &job.out)?;
            println!("{line}");
            Ok(())
        }
        Some(n) => sweep_runs(n, job.seed, &job.out, |seed, out| {
            run_image_once(job, seed, out)
        }),
    }
}

fn run_image_once(job: &ImageJob, seed: u64, out: &Path) -> Result<String, CliError> {
    let command = if job.deblur.is_some() { "deblur" } else { "denoise" };
    let clean = load_clean_image(job, seed)?;
    let kernel = job.deblur.as_ref().map(|spec| {
        if spec.identity_kernel {
            identity_kernel()
        } else {
            disk_kernel(spec.kernel_radius)
        }
    });
    let degraded = match &kernel {
        Some(k) => convolve(&clean, k),
        None => clean.clone(),
    };
    let observed = add_gaussian_noise(&degraded, job.noise_sigma, seed);

    let problem = match (&job.deblur, &kernel) {
        (Some(spec), Some(k)) => build_deblur_problem(&observed, job.mu, spec.t, k, job.phi),
        _ => build_denoise_problem(&observed, job.mu, job.phi),
    }
    .map_err(|e| violation(e.to_string()))?;

    let config = solver_config(&job.solver);
    let plan = config.resolve(&problem).map_err(config_err)?;
    let trace = dckit::run(&problem, &config, observed.as_slice())
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let ssim_values = ssim_per_record(&trace, &clean)?;
    let recovered = grid_like(&clean, &trace.final_point);
    let final_ssim = ssim_values.last().copied();

    ensure_dir(out)?;
    let write_pgm = |name: &str, img: &ImageGrid| -> Result<(), CliError> {
        pgm_write(&out.join(name), img, 255)
            .map_err(|e| CliError::Runtime(format!("cannot write {name}: {e}")))
    };
    write_pgm("observed.pgm", &observed)?;
    write_pgm("recovered.pgm", &recovered)?;
    write_io(&out.join("trace.csv"), &trace_csv(&trace, Some(&ssim_values)))?;

    let mut params = json!({
        "image": job.image.as_ref().map(|p| p.display().to_string()),
        "size": job.size,
        "rows": observed.rows(),
        "cols": observed.cols(),
        "mu": jf(job.mu),
        "phi": job.phi_name,
        "a": jf(job.phi_scale),
        "noise_sigma": jf(job.noise_sigma),
        "seed": seed,
        "solver": solver_json(&job.solver),
    });
    if let Some(spec) = &job.deblur {
        params["t"] = jf(spec.t);
        params["kernel"] = if spec.identity_kernel {
            json!("identity")
        } else {
            json!({"disk_radius": spec.kernel_radius})
        };
    }
    let outputs = ["trace.csv", "run.json", "observed.pgm", "recovered.pgm"];
    write_run_json(out, command, params, &plan, &trace, final_ssim, &outputs)?;

    Ok(format!(
        "{command}: {} seed {seed}: {} iterations ({}), f {}, ssim {} -> {}",
        plan.algorithm,
        trace.iterations(),
        trace.termination,
        trace.final_objective(),
        final_ssim.map_or("n/a".to_string(), |s| format!("{s:.4}")),
        out.display()
    ))
}

pub fn run_signal_job(job: &SignalJob) -> Result<(), CliError> {
    check_common(job.noise_sigma, job.sweep)?;
    if job.n < 2 {
        return Err(violation(format!(
            "the signal needs at least 2 samples, got {}",
            job.n
        )));
    }
    if job.segments == 0 {
        return Err(violation("the signal needs at least one segment"));
    }
    match job.sweep {
        None => {
            let line = run_signal_once(job, job.seed, &job.out)?;
            println!("{line}");
            Ok(())
        }
        Some(n) => sweep_runs(n, job.seed, &job.out, |seed, out| {
            run_signal_once(job, seed, out)
        }),
    }
}

fn run_signal_once(job: &SignalJob, seed: u64, out: &Path) -> Result<String, CliError> {
    let clean = piecewise_signal(job.n, job.segments, seed);
    let noise = gaussian_noise_vec(job.n, job.noise_sigma, seed);
    let observed: Vec<f64> = clean.iter().zip(&noise).map(|(c, e)| c + e).collect();

    let problem =
        build_signal1d_problem(&observed, job.mu, job.phi).map_err(|e| violation(e.to_string()))?;
    let config = solver_config(&job.solver);
    let plan = config.resolve(&problem).map_err(config_err)?;
    let trace = dckit::run(&problem, &config, &observed)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let max_err = clean
        .iter()
        .zip(&trace.final_point)
        .map(|(c, r)| (c - r).abs())
        .fold(0.0f64, f64::max);

    ensure_dir(out)?;
    write_io(&out.join("trace.csv"), &trace_csv(&trace, None))?;
    write_io(
        &out.join("signals.csv"),
        &signals_csv(&clean, &observed, &trace.final_point),
    )?;
    let params = json!({
        "n": job.n,
        "segments": job.segments,
        "noise_sigma": jf(job.noise_sigma),
        "mu": jf(job.mu),
        "phi": job.phi_name,
        "a": jf(job.phi_scale),
        "seed": seed,
        "solver": solver_json(&job.solver),
    });
    let outputs = ["trace.csv", "signals.csv", "run.json"];
    write_run_json(out, "signal", params, &plan, &trace, None, &outputs)?;

    Ok(format!(
        "signal: {} seed {seed}: {} iterations ({}), f {}, max error vs truth {:.3e} -> {}",
        plan.algorithm,
        trace.iterations(),
        trace.termination,
        trace.final_objective(),
        max_err,
        out.display()
    ))
}

pub fn run_bounds(job: &BoundsJob) -> Result<(), CliError> {
    use std::fmt::Write as _;
    let mut out = String::from("sigma1,sigma2,lambda,h1,h2,t_star,case\n");
    for &s1 in &job.sigma1 {
        for &l in &job.lambdas {
            let r = gamma_sup_inexact(s1, job.sigma2, l).map_err(config_err)?;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.sigma1, r.sigma2, r.lambda, r.sup_inexact, r.sup_older_inexact, r.t_star, r.case
            );
        }
    }
    print!("{out}");
    Ok(())
}

pub fn run_toy(job: &ToyJob) -> Result<(), CliError> {
    let problem = build_toy_1d();
    let config = solver_config(&job.solver);
    let plan = config.resolve(&problem).map_err(config_err)?;
    let trace = dckit::run(&problem, &config, &[job.start])
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let critical = brute_force_critical_points(&problem, -2.0, 2.0, 1e-3)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let flat: Vec<f64> = critical.iter().map(|p| p[0]).collect();
    let x = trace.final_point[0];
    let (nearest, distance) = flat
        .iter()
        .map(|c| (*c, (x - c).abs()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distances"))
        .expect("nonempty critical set");

    println!("toy: critical points {flat:?}");
    println!(
        "toy: {} from {}: reached {} (f {}) after {} iterations ({}); nearest critical point {nearest}, distance {distance:.3e}",
        plan.algorithm,
        job.start,
        x,
        trace.final_objective(),
        trace.iterations(),
        trace.termination,
    );

    if let Some(out) = &job.out {
        ensure_dir(out)?;
        write_io(&out.join("trace.csv"), &trace_csv(&trace, None))?;
        let params = json!({
            "start": jf(job.start),
            "solver": solver_json(&job.solver),
        });
        let outputs = ["trace.csv", "run.json"];
        write_run_json(out, "toy", params, &plan, &trace, None, &outputs)?;
        println!("toy: wrote {}", out.display());
    }
    Ok(())
}
