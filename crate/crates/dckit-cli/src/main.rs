//! `dckit` — difference-of-convex experiment runner.
//!
//! Subcommands: `denoise`, `deblur`, `signal`, `bounds`, `toy`. Experiment
//! runs leave a `trace.csv` (fixed header, one row per outer iteration),
//! a `run.json` recording every resolved parameter, and the relevant image
//! or signal files in the output directory. `bounds` prints its CSV table
//! to stdout.
//!
//! Exit codes: 0 success, 1 parse error (arguments, config file, or input
//! image), 2 invalid configuration (the validator report is printed to
//! stderr), 3 runtime failure.

mod args;
mod experiments;
mod report;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed input: arguments, config file, or an unreadable/invalid
    /// input image. Exit 1.
    Parse(String),
    /// Well-formed but invalid configuration; carries the validator report.
    /// Exit 2.
    Config(String),
    /// The run itself failed (solver error, output I/O). Exit 3.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Denoise(a) => {
            args::resolve_denoise(a).and_then(|job| experiments::run_image_job(&job))
        }
        Command::Deblur(a) => {
            args::resolve_deblur(a).and_then(|job| experiments::run_image_job(&job))
        }
        Command::Signal(a) => {
            args::resolve_signal(a).and_then(|job| experiments::run_signal_job(&job))
        }
        Command::Bounds(a) => args::resolve_bounds(a).and_then(|job| experiments::run_bounds(&job)),
        Command::Toy(a) => args::resolve_toy(a).and_then(|job| experiments::run_toy(&job)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
