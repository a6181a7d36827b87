//! The time loop: integrate until the projected residual is small or the
//! step budget runs out, recording diagnostics along the way.

use std::fs;
use std::path::Path;

use crate::diagnostics::{self, DiagRecord};
use crate::error::{Error, Result};
use crate::experiments::{self, RunConfig};
use crate::grid::{Field, GridSpec};
use crate::io::{self, ExitReason, RunManifest, SeriesWriter, SnapshotEntry};
use crate::stepper::{ConvexSplittingStepper, RunState};

/// Hooks called by [`run_with`]. Returning an error aborts the run.
pub trait RunObserver {
    fn on_record(&mut self, _state: &RunState, _record: &DiagRecord) -> Result<()> {
        Ok(())
    }

    fn on_snapshot(&mut self, _state: &RunState) -> Result<()> {
        Ok(())
    }
}

/// Observer that does nothing.
pub struct Quiet;

impl RunObserver for Quiet {}

#[derive(Debug)]
pub struct RunOutcome {
    pub state: RunState,
    pub series: Vec<DiagRecord>,
    pub exit_reason: ExitReason,
    /// Set when the run stopped on an error; `state` is the last good state.
    pub error: Option<Error>,
}

impl RunOutcome {
    pub fn final_residual(&self) -> Option<f64> {
        self.series.last().map(|r| r.steady_residual)
    }
}

/// Integrates from `u0`. A diagnostic record is kept for the initial state
/// and every step; snapshots are offered at step 0, every
/// `snapshot_every` steps and at the final step.
pub fn run_with(cfg: &RunConfig, g: &GridSpec, u0: Field, obs: &mut dyn RunObserver) -> RunOutcome {
    let p = cfg.model_params();
    let s = cfg.surface;
    let sc = cfg.stepper_config();
    let mut state = RunState::new(u0);
    let mut series = Vec::new();
    let mut stepper = ConvexSplittingStepper::new(g, &p, &s, &sc);

    let fail = |state: RunState, series: Vec<DiagRecord>, e: Error| RunOutcome {
        state,
        series,
        exit_reason: ExitReason::Error,
        error: Some(e),
    };

    let rec = match diagnostics::record(&state, g, &p, &s, 0) {
        Ok(r) => r,
        Err(e) => return fail(state, series, e),
    };
    series.push(rec);
    if let Err(e) = obs.on_record(&state, &rec).and_then(|_| obs.on_snapshot(&state)) {
        return fail(state, series, e);
    }

    let mut exit_reason = ExitReason::MaxSteps;
    while state.n < cfg.max_steps {
        let (next, stats) = match stepper.step(&state) {
            Ok(v) => v,
            Err(e) => return fail(state, series, e),
        };
        state = next;
        let rec = match diagnostics::record(&state, g, &p, &s, stats.iterations) {
            Ok(r) => r,
            Err(e) => return fail(state, series, e),
        };
        series.push(rec);
        if let Err(e) = obs.on_record(&state, &rec) {
            return fail(state, series, e);
        }
        let steady = rec.steady_residual <= cfg.steady_tol;
        if state.n.is_multiple_of(cfg.snapshot_every) || steady || state.n == cfg.max_steps {
            if let Err(e) = obs.on_snapshot(&state) {
                return fail(state, series, e);
            }
        }
        if steady {
            exit_reason = ExitReason::Steady;
            break;
        }
    }
    RunOutcome { state, series, exit_reason, error: None }
}

/// In-memory run of a validated config.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let g = cfg.grid()?;
    let u0 = experiments::initial_field(cfg, &g)?;
    Ok(run_with(cfg, &g, u0, &mut Quiet))
}

struct DirWriter<'a> {
    dir: &'a Path,
    g: &'a GridSpec,
    kappa: f64,
    surface: &'static str,
    series: SeriesWriter,
    snapshots: Vec<SnapshotEntry>,
}

impl RunObserver for DirWriter<'_> {
    fn on_record(&mut self, _state: &RunState, record: &DiagRecord) -> Result<()> {
        self.series.append(record)
    }

    fn on_snapshot(&mut self, state: &RunState) -> Result<()> {
        let file = io::snapshot_name(state.n);
        io::write_snapshot(&self.dir.join(&file), self.g, &state.u, state.t, state.n, self.kappa, self.surface)?;
        self.snapshots.push(SnapshotEntry { step: state.n, time: state.t, file });
        Ok(())
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs `cfg` writing `manifest.json`, `series.csv` and snapshots into
/// `dir`. The initial field is built before anything touches the disk, so a
/// bad config leaves no directory behind. A failed step still leaves a
/// complete manifest and the series up to the failure; the error is in the
/// outcome.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<(RunManifest, RunOutcome)> {
    let g = cfg.grid()?;
    let u0 = experiments::initial_field(cfg, &g)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = RunManifest {
        config: cfg.clone(),
        n: g.n(),
        h: g.h(),
        kappa: cfg.kappa(),
        started: now(),
        finished: None,
        exit_reason: None,
        steps: 0,
        final_steady_residual: None,
        snapshots: Vec::new(),
        bound_violation: None,
        error: None,
    };
    io::write_manifest(dir, &manifest)?;
    let mut w = DirWriter {
        dir,
        g: &g,
        kappa: cfg.kappa(),
        surface: cfg.surface.name(),
        series: SeriesWriter::create(&dir.join(io::SERIES_FILE))?,
        snapshots: Vec::new(),
    };
    let outcome = run_with(cfg, &g, u0, &mut w);
    manifest.finished = Some(now());
    manifest.exit_reason = Some(outcome.exit_reason);
    manifest.steps = outcome.state.n;
    manifest.final_steady_residual = outcome.final_residual();
    manifest.snapshots = w.snapshots;
    manifest.bound_violation = outcome.state.bound_violation;
    manifest.error = outcome.error.as_ref().map(|e| e.to_string());
    io::write_manifest(dir, &manifest)?;
    Ok((manifest, outcome))
}
