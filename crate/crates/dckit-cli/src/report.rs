//! Output files: `trace.csv`, `run.json`, and `signals.csv`.
//!
//! CSV numbers use Rust's shortest round-trip decimal formatting, so a file
//! re-read with a standard float parser reproduces the exact binary values.
//! The `trace.csv` header is fixed:
//! `iter,f,step_norm,lyapunov,energy_E,epsilon,ssim,elapsed_ms`.
//! The `ssim` field is empty for non-image experiments, and `elapsed_ms`
//! (wall time, the only non-deterministic column) is always last.

use std::fmt::Write as _;
use std::path::Path;

use dckit::config::ResolvedPlan;
use dckit::trace::Trace;
use serde_json::{json, Value};

use crate::CliError;

pub const TRACE_HEADER: &str = "iter,f,step_norm,lyapunov,energy_E,epsilon,ssim,elapsed_ms";

pub fn write_io(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Renders the per-iteration trace. `ssim` supplies one value per record for
/// image experiments and is omitted (empty field) otherwise.
pub fn trace_csv(trace: &Trace, ssim: Option<&[f64]>) -> String {
    if let Some(s) = ssim {
        assert_eq!(s.len(), trace.records.len());
    }
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (i, r) in trace.records.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{},{}",
            r.k, r.f_value, r.step_norm, r.lyapunov
        );
        match r.energy {
            Some(e) => {
                let _ = write!(out, ",{e}");
            }
            None => out.push(','),
        }
        let _ = write!(out, ",{}", r.epsilon);
        match ssim {
            Some(s) => {
                let _ = write!(out, ",{}", s[i]);
            }
            None => out.push(','),
        }
        let _ = writeln!(out, ",{}", r.elapsed.as_millis());
    }
    out
}

/// One `index,clean,observed,recovered` row per sample.
pub fn signals_csv(clean: &[f64], observed: &[f64], recovered: &[f64]) -> String {
    let mut out = String::from("index,clean,observed,recovered\n");
    for (i, ((c, o), r)) in clean.iter().zip(observed).zip(recovered).enumerate() {
        let _ = writeln!(out, "{i},{c},{o},{r}");
    }
    out
}

/// JSON-safe float: non-finite values become strings (JSON has no inf/nan).
pub fn jf(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

pub fn plan_json(plan: &ResolvedPlan) -> Value {
    json!({
        "algorithm": plan.algorithm.as_str(),
        "sigma1": jf(plan.sigma1),
        "sigma2": jf(plan.sigma2),
        "gamma": jf(plan.gamma),
        "gamma_sup": jf(plan.gamma_sup),
        "ridge": jf(plan.ridge),
        "t": jf(plan.t),
        "lambda": jf(plan.lambda),
        "inexact": plan.inexact,
        "sigma_bar": jf(plan.sigma_bar),
        "lyapunov_coeff": jf(plan.lyapunov_coeff),
        "descent_coeff": jf(plan.descent_coeff),
        "energy_coeff": jf(plan.energy_coeff),
    })
}

pub fn result_json(trace: &Trace, final_ssim: Option<f64>) -> Value {
    let mut result = json!({
        "termination": trace.termination.to_string(),
        "iterations": trace.iterations(),
        "f_initial": jf(trace.f_initial),
        "final_f": jf(trace.final_objective()),
        "monitor_warnings": trace.monitor_warnings,
        "elapsed_ms": trace.records.last().map_or(0, |r| r.elapsed.as_millis() as u64),
    });
    if let Some(s) = final_ssim {
        result["final_ssim"] = jf(s);
    }
    result
}

/// Assembles and writes `run.json`: tool identity, the fully resolved
/// parameters (enough to re-run the experiment bit for bit), the numeric
/// plan, the run outcome, and the files written next to it.
pub fn write_run_json(
    dir: &Path,
    command: &str,
    params: Value,
    plan: &ResolvedPlan,
    trace: &Trace,
    final_ssim: Option<f64>,
    outputs: &[&str],
) -> Result<(), CliError> {
    let doc = json!({
        "tool": {"name": "dckit", "version": env!("CARGO_PKG_VERSION")},
        "command": command,
        "params": params,
        "plan": plan_json(plan),
        "result": result_json(trace, final_ssim),
        "outputs": outputs,
    });
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Runtime(format!("cannot serialize run.json: {e}")))?;
    text.push('\n');
    write_io(&dir.join("run.json"), &text)
}

/// Solver settings as JSON, shared by every experiment's `params` block.
pub fn solver_json(s: &crate::args::SolverSettings) -> Value {
    let gamma = match s.gamma {
        dckit::config::GammaSpec::Explicit(g) => json!({"explicit": jf(g)}),
        dckit::config::GammaSpec::Fraction(f) => json!({"fraction": jf(f)}),
    };
    json!({
        "algorithm": s.algorithm.as_str(),
        "gamma": gamma,
        "lambda": jf(s.lambda),
        "iters": s.max_outer,
        "step_tol": jf(s.step_tol),
        "inner_stop": jf(s.inner_stop),
        "inner_iters": s.inner_max_iters,
    })
}
