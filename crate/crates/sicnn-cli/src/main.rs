//! `sicnn` — command-line driver for the simulation and certification
//! toolkit.
//!
//! Subcommands: `check` (certify the contraction and spacing conditions),
//! `simulate` (integrate an initial-value problem to CSV and optional SVG),
//! `ap` (approximate the unique bounded solution), `stability` (verify the
//! exponential decay envelope for a perturbed start), `scan` (empirical
//! translation-number search).
//!
//! Exit codes: 0 success, 1 a certification or verification check failed,
//! 2 configuration error, 3 solver failure.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sicnn::{
    bounded_solution, solve_ivp, stability_envelope, translation_scan, whole_line_residual,
    BuiltModel, ExecMode, RunConfig, SicnnError, Trajectory,
};

#[derive(Parser)]
#[command(
    name = "sicnn",
    version,
    about = "Simulate and certify shunting inhibitory cellular neural networks \
             with a piecewise constant delayed argument"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the run configuration comes from: a bundled preset or a JSON file.
#[derive(Args)]
struct Source {
    /// Bundled configuration name (currently `example6`, the 3×3
    /// demonstration network).
    #[arg(long, value_name = "NAME", conflicts_with = "config")]
    preset: Option<String>,
    /// Path to a JSON run configuration (unknown keys rejected).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the existence, uniqueness, and stability conditions; print
    /// the full report with margins as JSON.
    Check {
        #[command(flatten)]
        source: Source,
    },
    /// Integrate the configured initial-value problem and write the
    /// trajectory as CSV (and optionally as an SVG plot).
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Absolute end time of the integration.
        #[arg(long, value_name = "T")]
        t_end: f64,
        /// Sample spacing of the CSV rows.
        #[arg(long, default_value_t = 0.05, value_name = "DT")]
        stride: f64,
        /// CSV output path.
        #[arg(long, default_value = "trajectory.csv", value_name = "PATH")]
        out: PathBuf,
        /// Also render an SVG plot (optionally to the given path).
        #[arg(long, value_name = "PATH", num_args = 0..=1,
              default_missing_value = "trajectory.svg")]
        plot: Option<PathBuf>,
    },
    /// Approximate the unique bounded solution on a window and certify it
    /// a posteriori against the whole-line integral equation.
    Ap {
        #[command(flatten)]
        source: Source,
        /// Window start.
        #[arg(long, default_value_t = 0.0, value_name = "T")]
        t0: f64,
        /// Window end.
        #[arg(long, default_value_t = 30.0, value_name = "T")]
        t1: f64,
        /// Requested accuracy of the approximation.
        #[arg(long, default_value_t = 1e-6, value_name = "EPS")]
        accuracy: f64,
        /// Optional CSV output of the approximated solution.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// CSV sample spacing.
        #[arg(long, default_value_t = 0.05, value_name = "DT")]
        stride: f64,
    },
    /// Verify that a perturbed start decays inside the certified
    /// exponential envelope.
    Stability {
        #[command(flatten)]
        source: Source,
        /// Initial perturbation size (applied to every cell).
        #[arg(long, default_value_t = 0.01, value_name = "DELTA")]
        delta: f64,
        /// Horizon past the start time over which the envelope is checked.
        #[arg(long, default_value_t = 10.0, value_name = "T")]
        horizon: f64,
        /// Spacing of the envelope sample times.
        #[arg(long, default_value_t = 0.01, value_name = "DT")]
        sample_dt: f64,
    },
    /// Scan translation offsets of the bounded solution for ε-almost
    /// periods (empirical evidence, not a formal certificate).
    Scan {
        #[command(flatten)]
        source: Source,
        /// Acceptance threshold on the sup-norm translation defect.
        #[arg(long, default_value_t = 0.05, value_name = "EPS")]
        eps: f64,
        /// Smallest translation offset tried.
        #[arg(long, default_value_t = 0.0, value_name = "A")]
        alpha_min: f64,
        /// Largest translation offset tried.
        #[arg(long, default_value_t = 100.0, value_name = "A")]
        alpha_max: f64,
        /// Offset grid spacing (also the comparison stride).
        #[arg(long, default_value_t = 0.01, value_name = "DA")]
        alpha_step: f64,
        /// Comparison window start.
        #[arg(long, default_value_t = 0.0, value_name = "T")]
        window_start: f64,
        /// Comparison window end.
        #[arg(long, default_value_t = 30.0, value_name = "T")]
        window_end: f64,
        /// Accuracy of the underlying bounded-solution approximation.
        #[arg(long, default_value_t = 1e-4, value_name = "EPS")]
        accuracy: f64,
    },
}

/// Failure classes carrying their process exit code.
enum Failure {
    /// A certification or verification check did not pass (exit 1).
    Verification(String),
    /// The configuration was invalid (exit 2).
    Config(String),
    /// The computation itself broke down (exit 3).
    Solver(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Config(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<SicnnError> for Failure {
    fn from(e: SicnnError) -> Self {
        match e {
            SicnnError::Config(_) | SicnnError::InvalidSpec(_) => Failure::Config(e.to_string()),
            SicnnError::ConditionsNotMet(_) => Failure::Verification(e.to_string()),
            SicnnError::ScheduleRange(_)
            | SicnnError::History(_)
            | SicnnError::NonConvergence { .. }
            | SicnnError::InconsistentInitialData(_)
            | SicnnError::Coverage(_) => Failure::Solver(e.to_string()),
        }
    }
}

fn io_failure(what: &str, path: &Path, e: std::io::Error) -> Failure {
    Failure::Solver(format!("cannot write {what} {}: {e}", path.display()))
}

impl Source {
    fn load(&self) -> Result<RunConfig, Failure> {
        match (&self.preset, &self.config) {
            (Some(name), None) => match name.as_str() {
                "example6" => Ok(RunConfig::example6()),
                other => Err(Failure::Config(format!(
                    "unknown preset {other:?}; available: example6"
                ))),
            },
            (None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Failure::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                Ok(RunConfig::from_json(&text)?)
            }
            _ => Err(Failure::Config(
                "exactly one of --preset or --config is required".into(),
            )),
        }
    }

    /// Load and fully validate before any computation starts.
    fn build(&self) -> Result<BuiltModel, Failure> {
        Ok(self.load()?.build()?)
    }
}

fn print_report<T: serde::Serialize>(report: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Failure::Solver(format!("report serialization failed: {e}")))?;
    println!("{text}");
    Ok(())
}

fn write_trajectory_csv(traj: &Trajectory, stride: f64, path: &Path) -> Result<(), Failure> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf, stride)?;
    fs::write(path, buf).map_err(|e| io_failure("CSV", path, e))?;
    Ok(())
}

fn require_initial(model: &BuiltModel) -> Result<sicnn::IvpSetup, Failure> {
    model.setup.clone().ok_or_else(|| {
        Failure::Config("this command needs initial data (`initial` section) in the config".into())
    })
}

fn cmd_check(source: &Source) -> Result<(), Failure> {
    let model = source.build()?;
    let report = model.net.check_conditions(&model.schedule, &model.act);
    print_report(&report)?;
    if report.all_pass {
        Ok(())
    } else {
        let failing: Vec<&str> = report
            .entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| e.name)
            .collect();
        Err(Failure::Verification(format!(
            "conditions failed: {}",
            failing.join(", ")
        )))
    }
}

fn cmd_simulate(
    source: &Source,
    t_end: f64,
    stride: f64,
    out: &Path,
    plot: Option<&Path>,
) -> Result<(), Failure> {
    let model = source.build()?;
    let setup = require_initial(&model)?;
    if !(t_end > setup.sigma) {
        return Err(Failure::Config(format!(
            "--t-end {t_end} must lie past the start time {}",
            setup.sigma
        )));
    }
    let traj = solve_ivp(
        &model.net,
        &model.schedule,
        &model.act,
        &setup,
        t_end,
        &model.opts,
    )?;
    write_trajectory_csv(&traj, stride, out)?;
    if let Some(svg_path) = plot {
        let svg = plot::render_svg(&traj, stride)?;
        fs::write(svg_path, svg).map_err(|e| io_failure("SVG", svg_path, e))?;
    }
    let report = json!({
        "command": "simulate",
        "start": traj.start(),
        "end": traj.end(),
        "cells": traj.cell_count(),
        "csv": out.display().to_string(),
        "svg": plot.map(|p| p.display().to_string()),
        "sup_norm": traj.sup_norm(traj.start(), traj.end(), stride.min(0.05))?,
    });
    print_report(&report)
}

fn cmd_ap(
    source: &Source,
    t0: f64,
    t1: f64,
    accuracy: f64,
    out: Option<&Path>,
    stride: f64,
) -> Result<(), Failure> {
    let model = source.build()?;
    let traj = bounded_solution(
        &model.net,
        &model.schedule,
        &model.act,
        t0,
        t1,
        accuracy,
        &model.opts,
    )?;
    let constants = model
        .net
        .derived_constants(&model.schedule, model.act.bound());
    let sup = traj.sup_norm(t0, t1, 0.01)?;
    // Certify a posteriori: the defect of the whole-line integral equation,
    // measured from the first time the truncated-tail bound provably drops
    // below the requested accuracy.
    let tail_tol = accuracy.max(1e-12);
    let lead = constants
        .solution_bound
        .map(|h| ((h / tail_tol).ln() / constants.min_decay).max(0.0) + 1e-6)
        .unwrap_or(f64::INFINITY);
    let residual_from = t0 + lead;
    let residual = if residual_from < t1 {
        Some(whole_line_residual(
            &model.net,
            &model.schedule,
            &model.act,
            &traj,
            residual_from,
            tail_tol,
        ))
    } else {
        None
    };
    let report = json!({
        "command": "ap",
        "window": [t0, t1],
        "accuracy": accuracy,
        "sup_norm": sup,
        "solution_bound": constants.solution_bound,
        "residual_from": residual.as_ref().map(|_| residual_from),
        "whole_line_residual": residual.as_ref().and_then(|r| r.as_ref().ok()),
        "residual_note": match &residual {
            Some(Err(e)) => Some(e.to_string()),
            Some(Ok(_)) => None,
            None => Some(format!(
                "window too short to certify the residual: the truncated-tail \
                 bound needs {lead:.3} of lead past t0"
            )),
        },
    });
    if let Some(path) = out {
        write_trajectory_csv(&traj, stride, path)?;
    }
    print_report(&report)?;
    if let Some(h) = constants.solution_bound {
        if sup > h + accuracy {
            return Err(Failure::Verification(format!(
                "sup norm {sup} exceeds the certified bound {h} + accuracy"
            )));
        }
    }
    Ok(())
}

fn cmd_stability(source: &Source, delta: f64, horizon: f64, sample_dt: f64) -> Result<(), Failure> {
    let model = source.build()?;
    let base = require_initial(&model)?;
    let report = stability_envelope(
        &model.net,
        &model.schedule,
        &model.act,
        &base,
        delta,
        horizon,
        sample_dt,
        &model.opts,
    )?;
    print_report(&report)?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Verification(report.diagnosis.unwrap_or_else(
            || "envelope violated at some sample time".into(),
        )))
    }
}

#[allow(clippy::too_many_arguments)] // the scan is parameterized by the full experiment
fn cmd_scan(
    source: &Source,
    eps: f64,
    alpha_min: f64,
    alpha_max: f64,
    alpha_step: f64,
    window_start: f64,
    window_end: f64,
    accuracy: f64,
) -> Result<(), Failure> {
    let model = source.build()?;
    // The trajectory must cover the comparison window shifted by every
    // candidate offset.
    let lo = window_start.min(window_start + alpha_min);
    let hi = window_end.max(window_start + alpha_max + (window_end - window_start));
    let traj = bounded_solution(
        &model.net,
        &model.schedule,
        &model.act,
        lo,
        hi,
        accuracy,
        &model.opts,
    )?;
    let report = translation_scan(
        &traj,
        eps,
        (alpha_min, alpha_max),
        alpha_step,
        (window_start, window_end),
        ExecMode::default(),
    )?;
    print_report(&report)?;
    if report.accepted.is_empty() {
        Err(Failure::Verification(format!(
            "no ε-almost periods found for ε = {eps} over [{alpha_min}, {alpha_max}]"
        )))
    } else {
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Check { source } => cmd_check(source),
        Command::Simulate {
            source,
            t_end,
            stride,
            out,
            plot,
        } => cmd_simulate(source, *t_end, *stride, out, plot.as_deref()),
        Command::Ap {
            source,
            t0,
            t1,
            accuracy,
            out,
            stride,
        } => cmd_ap(source, *t0, *t1, *accuracy, out.as_deref(), *stride),
        Command::Stability {
            source,
            delta,
            horizon,
            sample_dt,
        } => cmd_stability(source, *delta, *horizon, *sample_dt),
        Command::Scan {
            source,
            eps,
            alpha_min,
            alpha_max,
            alpha_step,
            window_start,
            window_end,
            accuracy,
        } => cmd_scan(
            source,
            *eps,
            *alpha_min,
            *alpha_max,
            *alpha_step,
            *window_start,
            *window_end,
            *accuracy,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
