//! Command-line front end. `main` in the binary only forwards to [`main`].

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::diagnostics;
use crate::error::Error;
use crate::experiments::{self, Example, RunConfig};
use crate::io::{self, ExitReason};
use crate::runner;

pub const EXIT_OK: i32 = 0;
/// Audit found mass drift or an energy increase.
pub const EXIT_AUDIT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

const EXIT_HELP: &str = "Exit codes:
  0  success (run reached a steady state or the step budget; verify passed)
  1  verify found mass drift or an energy increase
  2  invalid or unreadable configuration
  3  linear solver failure during a run
  4  I/O failure or malformed run directory

Set PACDYN_THREADS to cap the number of worker threads.";

#[derive(Debug, Parser)]
#[command(name = "pacdyn", version, about = "Projected Allen-Cahn solver for dynamic boundary conditions", after_help = EXIT_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a configured example, writing a run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long)]
        snapshot_every: Option<u64>,
    },
    /// Re-audit mass conservation and energy decay of a run directory.
    Verify {
        #[arg(long)]
        run: PathBuf,
    },
    /// List the built-in examples.
    ListExamples {
        /// One JSON object per line.
        #[arg(long)]
        json: bool,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::InvalidGrid(_) | Error::UnknownExample(_) => {
            EXIT_CONFIG
        }
        Error::Solver(_) => EXIT_SOLVER,
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
        Error::Dimension { .. } | Error::MetricUndefined(_) => EXIT_IO,
    }
}

fn load(config: &Path, max_steps: Option<u64>, snapshot_every: Option<u64>) -> Result<RunConfig, Error> {
    let mut cfg = experiments::load_config(config)?;
    if let Some(k) = max_steps {
        cfg.max_steps = k;
    }
    if let Some(k) = snapshot_every {
        cfg.snapshot_every = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(config: &Path, out: &Path, max_steps: Option<u64>, snapshot_every: Option<u64>, err: &mut dyn Write) -> i32 {
    let cfg = match load(config, max_steps, snapshot_every) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    match runner::run_to_dir(&cfg, out) {
        Ok((m, outcome)) => match outcome.error {
            Some(e) => {
                let _ = writeln!(err, "error at step {}: {e}", m.steps + 1);
                exit_code(&e)
            }
            None => {
                let reason = if m.exit_reason == Some(ExitReason::Steady) { "steady" } else { "max_steps" };
                let _ = writeln!(
                    err,
                    "{reason} after {} steps, residual {:.3e}",
                    m.steps,
                    m.final_steady_residual.unwrap_or(f64::NAN)
                );
                if let Some(b) = m.bound_violation {
                    let _ = writeln!(err, "warning: |u| reached {:.3} at step {}, beyond the stability bound", b.max_abs, b.step);
                }
                EXIT_OK
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Mass drift tolerated by `verify`, scaled like the solver tolerance.
pub fn mass_tolerance(cfg: &RunConfig) -> f64 {
    10.0 * cfg.linear_tol * cfg.field_bound
}

fn cmd_verify(run: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let loaded = io::read_manifest(run).and_then(|m| Ok((m, io::read_series(&run.join(io::SERIES_FILE))?)));
    let (m, series) = match loaded {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    if series.is_empty() {
        let _ = writeln!(err, "error: {} has no records", io::SERIES_FILE);
        return EXIT_IO;
    }
    let tol = mass_tolerance(&m.config);
    let (db, ds) = diagnostics::mass_drift(&series);
    let bumps = diagnostics::audit_series(&series);
    let mut ok = true;
    if db > tol {
        ok = false;
        let _ = writeln!(out, "bulk mass drift {db:.3e} exceeds {tol:.3e}");
    }
    if ds > tol {
        ok = false;
        let _ = writeln!(out, "surface mass drift {ds:.3e} exceeds {tol:.3e}");
    }
    for step in &bumps {
        ok = false;
        let _ = writeln!(out, "energy increased at step {step}");
    }
    if ok {
        let _ = writeln!(
            out,
            "ok: {} records, mass drift {db:.2e} / {ds:.2e}, energy non-increasing",
            series.len()
        );
        EXIT_OK
    } else {
        EXIT_AUDIT
    }
}

fn cmd_list(json: bool, out: &mut dyn Write) -> i32 {
    for e in Example::BUILTIN {
        let d = RunConfig::for_example(e, experiments::DEFAULT_N);
        let res = if json {
            let v = serde_json::json!({
                "name": e.name(),
                "description": e.description(),
                "defaults": d,
            });
            writeln!(out, "{v}")
        } else {
            writeln!(
                out,
                "{:<8} {}\n         N={} dt={} kappa=2h gamma1={} gamma2={} S1={} S2={} surface={} max_steps={}",
                e.name(),
                e.description(),
                d.n,
                d.dt,
                d.gamma1,
                d.gamma2,
                d.s1,
                d.s2,
                surface_label(&d),
                d.max_steps
            )
        };
        if res.is_err() {
            return EXIT_IO;
        }
    }
    EXIT_OK
}

fn surface_label(c: &RunConfig) -> String {
    match c.surface {
        crate::model::SurfacePotential::DoubleWell => "DoubleWell".into(),
        crate::model::SurfacePotential::MovingContactLine { theta_s, gamma_tilde } => {
            format!("MovingContactLine(theta_s={theta_s}, gamma_tilde={gamma_tilde})")
        }
    }
}

/// Executes a parsed command line, returning the process exit code.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Run { config, out: dir, max_steps, snapshot_every } => cmd_run(&config, &dir, max_steps, snapshot_every, err),
        Command::Verify { run } => cmd_verify(&run, out, err),
        Command::ListExamples { json } => cmd_list(json, out),
    }
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    execute(cli, &mut std::io::stdout(), &mut std::io::stderr())
}
