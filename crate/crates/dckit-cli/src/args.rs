//! Command-line surface: argument structs, the `key=value` config file, and
//! the precedence rules (flags > config file > built-in defaults).
//!
//! Every experiment flag is optional at the clap layer; resolution happens
//! afterwards so a config file can fill any gap a flag left open. The
//! resolved structs carry only concrete values and are what the experiment
//! runners consume. `DCKIT_SEED`, when set, overrides the seed from any
//! source.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use dckit::config::{Algorithm, GammaSpec};
use dckit::imaging::{PhiFamily, PhiKind};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "dckit",
    version,
    about = "Difference-of-convex experiment runner",
    after_help = "Exit codes: 0 success, 1 parse error (arguments, config file, or input \
                  image), 2 invalid configuration (the validator report is printed), \
                  3 runtime failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corrupt an image with seeded noise and restore it with a smoothed-TV model
    Denoise(DenoiseArgs),
    /// Blur an image with a disk kernel, add seeded noise, and restore it
    Deblur(DeblurArgs),
    /// Restore a seeded piecewise-constant 1D signal
    Signal(SignalArgs),
    /// Print the admissible inertial-coefficient table as CSV on stdout
    Bounds(BoundsArgs),
    /// Run a solver on the 1D toy problem x^2 - |x| and check its limit point
    Toy(ToyArgs),
}

/// Solver knobs shared by every experiment subcommand.
#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    /// Algorithm: dca | sdca | indca-e | indca-n | rindca-e | rindca-n [default: rindca-e]
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Inertial coefficient as a fraction of the admissible supremum [default: 0.99]
    #[arg(long, value_name = "FRAC")]
    pub gamma_frac: Option<f64>,
    /// Explicit inertial coefficient (takes precedence over --gamma-frac)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Certificate tolerance for inexact variants, in (0, 1) [default: 0.5]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Outer iteration budget [default: 100]
    #[arg(long)]
    pub iters: Option<usize>,
    /// Stop once consecutive iterates are closer than this [default: 1e-8]
    #[arg(long)]
    pub step_tol: Option<f64>,
    /// Inner solver stopping tolerance [default: 1e-4]
    #[arg(long)]
    pub inner_stop: Option<f64>,
    /// Inner solver iteration budget per subproblem [default: 2000]
    #[arg(long)]
    pub inner_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Input PGM image (P2 or P5); a seeded synthetic scene when omitted
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Side length: inputs are center-cropped and block-averaged down to
    /// SIZE x SIZE (0 keeps the native size) [default: 64]
    #[arg(long)]
    pub size: Option<usize>,
    /// Fidelity weight [default: 0.95]
    #[arg(long)]
    pub mu: Option<f64>,
    /// Concave penalty family: atan | log | rational | exp [default: atan]
    #[arg(long)]
    pub phi: Option<String>,
    /// Scale parameter of the penalty family [default: 6]
    #[arg(long)]
    pub a: Option<f64>,
    /// Noise standard deviation on unit-range intensities [default: 80/255]
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Base RNG seed; the DCKIT_SEED env var overrides it [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: dckit-out/denoise]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run N independent experiments (seeds base+0..N) across threads
    #[arg(long, value_name = "N")]
    pub sweep: Option<usize>,
    /// key=value file supplying defaults for any flag of this subcommand
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct DeblurArgs {
    #[command(flatten)]
    pub base: DenoiseArgs,
    /// Quadratic split weight; at least mu * (kernel l1 norm)^2 [default: mu + 2]
    #[arg(long)]
    pub t: Option<f64>,
    /// Disk blur kernel radius in pixels [default: 3]
    #[arg(long)]
    pub kernel_radius: Option<usize>,
    /// Use the 1x1 identity kernel (the model reduces to denoising)
    #[arg(long)]
    pub identity_kernel: bool,
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    /// Signal length (at least 2) [default: 256]
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of constant segments in the ground truth [default: 8]
    #[arg(long)]
    pub segments: Option<usize>,
    /// Noise standard deviation [default: 0.1]
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Fidelity weight [default: 20]
    #[arg(long)]
    pub mu: Option<f64>,
    /// Concave penalty family: atan | log | rational | exp [default: atan]
    #[arg(long)]
    pub phi: Option<String>,
    /// Scale parameter of the penalty family [default: 6]
    #[arg(long)]
    pub a: Option<f64>,
    /// Base RNG seed; the DCKIT_SEED env var overrides it [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: dckit-out/signal]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run N independent experiments (seeds base+0..N) across threads
    #[arg(long, value_name = "N")]
    pub sweep: Option<usize>,
    /// key=value file supplying defaults for any flag of this subcommand
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Comma-separated first-part moduli [default: 1,2,3,4]
    #[arg(long)]
    pub sigma1: Option<String>,
    /// Second-part modulus [default: 1]
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Comma-separated certificate tolerances [default: 0.01..0.99, step 0.01]
    #[arg(long)]
    pub lambda: Option<String>,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    /// Starting point [default: 0.9]
    #[arg(long)]
    pub start: Option<f64>,
    /// Output directory for trace.csv and run.json (stdout summary only when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value file supplying defaults for any flag of this subcommand
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Values read from a `--config` file, consumed key by key during merging so
/// leftovers can be reported as unknown keys.
#[derive(Debug, Default)]
pub struct FileValues {
    values: BTreeMap<String, String>,
    path: Option<PathBuf>,
}

impl FileValues {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Parse(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Parse(format!(
                    "{}:{}: expected key=value, got '{raw}'",
                    path.display(),
                    idx + 1
                )));
            };
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self {
            values,
            path: Some(path.to_path_buf()),
        })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.values.remove(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::Parse(format!("config key '{key}': cannot parse '{raw}': {e}"))
            }),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(key) = self.values.keys().next() {
            let place = self
                .path
                .map(|p| format!(" in {}", p.display()))
                .unwrap_or_default();
            return Err(CliError::Parse(format!("unknown config key '{key}'{place}")));
        }
        Ok(())
    }
}

fn merged<T: FromStr>(
    flag: Option<T>,
    file: &mut FileValues,
    key: &str,
    default: T,
) -> Result<T, CliError>
where
    T::Err: Display,
{
    let from_file = file.take::<T>(key)?;
    Ok(flag.or(from_file).unwrap_or(default))
}

fn parse_phi_kind(name: &str) -> Result<PhiKind, CliError> {
    match name {
        "log" => Ok(PhiKind::Log),
        "rational" => Ok(PhiKind::Rational),
        "atan" => Ok(PhiKind::Atan),
        "exp" => Ok(PhiKind::Exp),
        other => Err(CliError::Parse(format!(
            "unknown penalty family '{other}' (expected atan, log, rational, or exp)"
        ))),
    }
}

fn phi_kind_name(kind: PhiKind) -> &'static str {
    match kind {
        PhiKind::Log => "log",
        PhiKind::Rational => "rational",
        PhiKind::Atan => "atan",
        PhiKind::Exp => "exp",
    }
}

fn seed_with_env(seed: u64) -> Result<u64, CliError> {
    match std::env::var("DCKIT_SEED") {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|e| CliError::Parse(format!("DCKIT_SEED: cannot parse '{s}': {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(seed),
        Err(e) => Err(CliError::Parse(format!("DCKIT_SEED: {e}"))),
    }
}

fn parse_f64_list(raw: &str, what: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| CliError::Parse(format!("{what}: cannot parse '{s}': {e}")))
        })
        .collect()
}

/// Concrete solver settings after merging.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub algorithm: Algorithm,
    pub gamma: GammaSpec,
    pub lambda: f64,
    pub max_outer: usize,
    pub step_tol: f64,
    pub inner_stop: f64,
    pub inner_max_iters: usize,
}

fn resolve_solver(args: &SolverArgs, file: &mut FileValues) -> Result<SolverSettings, CliError> {
    let algorithm_name = merged(
        args.algorithm.clone(),
        file,
        "algorithm",
        "rindca-e".to_string(),
    )?;
    let algorithm = Algorithm::from_str(&algorithm_name)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let file_gamma = file.take::<f64>("gamma")?;
    let file_frac = file.take::<f64>("gamma-frac")?;
    let gamma = if let Some(g) = args.gamma {
        GammaSpec::Explicit(g)
    } else if let Some(fr) = args.gamma_frac {
        GammaSpec::Fraction(fr)
    } else if let Some(g) = file_gamma {
        GammaSpec::Explicit(g)
    } else if let Some(fr) = file_frac {
        GammaSpec::Fraction(fr)
    } else {
        GammaSpec::Fraction(0.99)
    };
    Ok(SolverSettings {
        algorithm,
        gamma,
        lambda: merged(args.lambda, file, "lambda", 0.5)?,
        max_outer: merged(args.iters, file, "iters", 100)?,
        step_tol: merged(args.step_tol, file, "step-tol", 1e-8)?,
        inner_stop: merged(args.inner_stop, file, "inner-stop", 1e-4)?,
        inner_max_iters: merged(args.inner_iters, file, "inner-iters", 2000)?,
    })
}

/// Fully resolved image-restoration job (denoising, or deblurring when
/// `deblur` is present).
#[derive(Debug, Clone)]
pub struct ImageJob {
    pub image: Option<PathBuf>,
    pub size: usize,
    pub mu: f64,
    pub phi: PhiFamily,
    pub phi_name: &'static str,
    pub phi_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub sweep: Option<usize>,
    pub solver: SolverSettings,
    pub deblur: Option<DeblurSpec>,
}

#[derive(Debug, Clone)]
pub struct DeblurSpec {
    pub t: f64,
    pub kernel_radius: usize,
    pub identity_kernel: bool,
}

fn resolve_image_common(
    args: &DenoiseArgs,
    file: &mut FileValues,
    default_out: &str,
) -> Result<ImageJob, CliError> {
    let solver = resolve_solver(&args.solver, file)?;
    let image = match &args.image {
        Some(p) => Some(p.clone()),
        None => file.take::<PathBuf>("image")?,
    };
    let phi_kind = parse_phi_kind(&merged(args.phi.clone(), file, "phi", "atan".into())?)?;
    let phi_scale = merged(args.a, file, "a", 6.0)?;
    let phi = PhiFamily::new(phi_kind, phi_scale)
        .map_err(|e| CliError::Config(format!("violation: {e}")))?;
    let seed = seed_with_env(merged(args.seed, file, "seed", 0)?)?;
    Ok(ImageJob {
        image,
        size: merged(args.size, file, "size", 64)?,
        mu: merged(args.mu, file, "mu", 0.95)?,
        phi,
        phi_name: phi_kind_name(phi_kind),
        phi_scale,
        noise_sigma: merged(args.noise_sigma, file, "noise-sigma", 80.0 / 255.0)?,
        seed,
        out: merged(args.out.clone(), file, "out", PathBuf::from(default_out))?,
        sweep: match args.sweep {
            Some(n) => Some(n),
            None => file.take::<usize>("sweep")?,
        },
        solver,
        deblur: None,
    })
}

pub fn resolve_denoise(args: &DenoiseArgs) -> Result<ImageJob, CliError> {
    let mut file = FileValues::load(args.config.as_deref())?;
    let job = resolve_image_common(args, &mut file, "dckit-out/denoise")?;
    file.finish()?;
    Ok(job)
}

pub fn resolve_deblur(args: &DeblurArgs) -> Result<ImageJob, CliError> {
    let mut file = FileValues::load(args.base.config.as_deref())?;
    let mut job = resolve_image_common(&args.base, &mut file, "dckit-out/deblur")?;
    let t = merged(args.t, &mut file, "t", job.mu + 2.0)?;
    let kernel_radius = merged(args.kernel_radius, &mut file, "kernel-radius", 3)?;
    let identity_kernel = if args.identity_kernel {
        true
    } else {
        file.take::<bool>("identity-kernel")?.unwrap_or(false)
    };
    file.finish()?;
    job.deblur = Some(DeblurSpec {
        t,
        kernel_radius,
        identity_kernel,
    });
    Ok(job)
}

/// Fully resolved 1D-signal job.
#[derive(Debug, Clone)]
pub struct SignalJob {
    pub n: usize,
    pub segments: usize,
    pub noise_sigma: f64,
    pub mu: f64,
    pub phi: PhiFamily,
    pub phi_name: &'static str,
    pub phi_scale: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub sweep: Option<usize>,
    pub solver: SolverSettings,
}

pub fn resolve_signal(args: &SignalArgs) -> Result<SignalJob, CliError> {
    let mut file = FileValues::load(args.config.as_deref())?;
    let solver = resolve_solver(&args.solver, &mut file)?;
    let phi_kind = parse_phi_kind(&merged(args.phi.clone(), &mut file, "phi", "atan".into())?)?;
    let phi_scale = merged(args.a, &mut file, "a", 6.0)?;
    let phi = PhiFamily::new(phi_kind, phi_scale)
        .map_err(|e| CliError::Config(format!("violation: {e}")))?;
    let seed = seed_with_env(merged(args.seed, &mut file, "seed", 0)?)?;
    let job = SignalJob {
        n: merged(args.n, &mut file, "n", 256)?,
        segments: merged(args.segments, &mut file, "segments", 8)?,
        noise_sigma: merged(args.noise_sigma, &mut file, "noise-sigma", 0.1)?,
        mu: merged(args.mu, &mut file, "mu", 20.0)?,
        phi,
        phi_name: phi_kind_name(phi_kind),
        phi_scale,
        seed,
        out: merged(
            args.out.clone(),
            &mut file,
            "out",
            PathBuf::from("dckit-out/signal"),
        )?,
        sweep: match args.sweep {
            Some(n) => Some(n),
            None => file.take::<usize>("sweep")?,
        },
        solver,
    };
    file.finish()?;
    Ok(job)
}

/// Fully resolved bound-table request.
#[derive(Debug, Clone)]
pub struct BoundsJob {
    pub sigma1: Vec<f64>,
    pub sigma2: f64,
    pub lambdas: Vec<f64>,
}

pub fn resolve_bounds(args: &BoundsArgs) -> Result<BoundsJob, CliError> {
    let sigma1 = match &args.sigma1 {
        Some(raw) => parse_f64_list(raw, "--sigma1")?,
        None => vec![1.0, 2.0, 3.0, 4.0],
    };
    let lambdas = match &args.lambda {
        Some(raw) => parse_f64_list(raw, "--lambda")?,
        None => (1..100).map(|i| i as f64 * 0.01).collect(),
    };
    if sigma1.is_empty() {
        return Err(CliError::Parse("--sigma1: empty list".into()));
    }
    if lambdas.is_empty() {
        return Err(CliError::Parse("--lambda: empty list".into()));
    }
    Ok(BoundsJob {
        sigma1,
        sigma2: args.sigma2.unwrap_or(1.0),
        lambdas,
    })
}

/// Fully resolved toy-problem run.
#[derive(Debug, Clone)]
pub struct ToyJob {
    pub start: f64,
    pub out: Option<PathBuf>,
    pub solver: SolverSettings,
}

pub fn resolve_toy(args: &ToyArgs) -> Result<ToyJob, CliError> {
    let mut file = FileValues::load(args.config.as_deref())?;
    let solver = resolve_solver(&args.solver, &mut file)?;
    let job = ToyJob {
        start: merged(args.start, &mut file, "start", 0.9)?,
        out: match &args.out {
            Some(p) => Some(p.clone()),
            None => file.take::<PathBuf>("out")?,
        },
        solver,
    };
    file.finish()?;
    Ok(job)
}
