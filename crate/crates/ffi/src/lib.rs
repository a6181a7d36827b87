//! C ABI over the pacdyn simulator.
//!
//! A simulation is an opaque `PacdynSim` created from a JSON run config.
//! Every entry point returns a `PacdynStatus`; on failure the message is
//! available from `pacdyn_last_error_message` on the same thread. Panics
//! are caught at the boundary and reported as `PACDYN_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pacdyn::diagnostics::{self, DiagRecord};
use pacdyn::experiments;
use pacdyn::{ConvexSplittingStepper, Error, Field, GridSpec, RunConfig, RunState};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacdynStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Solver = 4,
    Dimension = 5,
    Io = 6,
    Panic = 7,
}

/// Diagnostics of the current state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PacdynDiagnostics {
    pub step: u64,
    pub time: f64,
    pub mass_bulk: f64,
    pub mass_surf: f64,
    pub energy_bulk: f64,
    pub energy_surf: f64,
    pub energy_total: f64,
    pub steady_residual: f64,
    /// CG iterations of the last step, 0 before the first.
    pub solver_iterations: u64,
}

impl From<DiagRecord> for PacdynDiagnostics {
    fn from(r: DiagRecord) -> Self {
        PacdynDiagnostics {
            step: r.step,
            time: r.time,
            mass_bulk: r.mass_bulk,
            mass_surf: r.mass_surf,
            energy_bulk: r.energy_bulk,
            energy_surf: r.energy_surf,
            energy_total: r.energy_total,
            steady_residual: r.steady_residual,
            solver_iterations: r.solver_iterations as u64,
        }
    }
}

/// Opaque simulation handle.
pub struct PacdynSim {
    cfg: RunConfig,
    grid: GridSpec,
    state: RunState,
    last: DiagRecord,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PacdynStatus {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::InvalidGrid(_) | Error::UnknownExample(_) => {
            PacdynStatus::Config
        }
        Error::Solver(_) => PacdynStatus::Solver,
        Error::Dimension { .. } => PacdynStatus::Dimension,
        Error::Io { .. } | Error::Format { .. } | Error::MetricUndefined(_) => PacdynStatus::Io,
    }
}

struct Fail(PacdynStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PacdynStatus::NullPointer, format!("`{what}` is null"))
}

fn check_len(expected: usize, got: usize) -> Result<(), Fail> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got }.into())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PacdynStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PacdynStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PacdynStatus::Panic
        }
    }
}

unsafe fn sim_mut<'a>(sim: *mut PacdynSim) -> Result<&'a mut PacdynSim, Fail> {
    sim.as_mut().ok_or_else(|| null("sim"))
}

unsafe fn sim_ref<'a>(sim: *const PacdynSim) -> Result<&'a PacdynSim, Fail> {
    sim.as_ref().ok_or_else(|| null("sim"))
}

impl PacdynSim {
    fn new(cfg: RunConfig) -> Result<Self, Error> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        let u0 = experiments::initial_field(&cfg, &grid)?;
        let state = RunState::new(u0);
        let last = diagnostics::record(&state, &grid, &cfg.model_params(), &cfg.surface, 0)?;
        Ok(PacdynSim { cfg, grid, state, last })
    }

    /// Advances up to `n` steps, stopping early at a steady state when
    /// `stop_at_steady`. Returns the number of steps taken.
    fn advance(&mut self, n: u64, stop_at_steady: bool) -> Result<u64, Error> {
        let p = self.cfg.model_params();
        let mut stepper = ConvexSplittingStepper::new(&self.grid, &p, &self.cfg.surface, &self.cfg.stepper_config());
        let mut taken = 0;
        while taken < n {
            if stop_at_steady && self.last.steady_residual <= self.cfg.steady_tol {
                break;
            }
            let (next, stats) = stepper.step(&self.state)?;
            self.last = diagnostics::record(&next, &self.grid, &p, &self.cfg.surface, stats.iterations)?;
            self.state = next;
            taken += 1;
        }
        Ok(taken)
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pacdyn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pacdyn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a simulation from a JSON run config and builds its initial
/// field. On success `*out` owns a handle to release with `pacdyn_sim_free`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacdyn_sim_new(config_json: *const c_char, out: *mut *mut PacdynSim) -> PacdynStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        if config_json.is_null() {
            return Err(null("config_json"));
        }
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|e| Fail(PacdynStatus::InvalidUtf8, format!("config is not UTF-8: {e}")))?;
        let sim = PacdynSim::new(experiments::parse_config(text)?)?;
        *out = Box::into_raw(Box::new(sim));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from `pacdyn_sim_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pacdyn_sim_free(sim: *mut PacdynSim) {
    if !sim.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(sim))));
    }
}

/// Takes `n` steps. `steps_taken` may be null; otherwise it receives the
/// number of completed steps, also on failure.
///
/// # Safety
/// `sim` must be a live handle; `steps_taken` null or valid.
#[no_mangle]
pub unsafe extern "C" fn pacdyn_sim_step(sim: *mut PacdynSim, n: u64, steps_taken: *mut u64) -> PacdynStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        let start = s.state.n;
        let res = s.advance(n, false);
        if let Some(t) = steps_taken.as_mut() {
            *t = s.state.n - start;
        }
        res.map(|_| ()).map_err(Fail::from)
    })
}

/// Steps until the steady residual reaches the configured tolerance or
/// the config's `max_steps` total is reached. `steady` may be null.
///
/// # Safety
/// `sim` must be a live handle; `steady` null or valid.
#[no_mangle]
pub unsafe extern "C" fn pacdyn_sim_run(sim: *mut PacdynSim, steady: *mut bool) -> PacdynStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        let budget = s.cfg.max_steps.saturating_sub(s.state.n);
        let res = s.advance(budget, true);
        if let Some(f) = steady.as_mut() {
            *f = s.last.steady_residual <= s.cfg.steady_tol;
        }
        res.map(|_| ()).map_err(Fail::from)
    })
}

/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pacdyn_sim_diagnostics(sim: *const PacdynSim, out: *mut PacdynDiagnostics) -> PacdynStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = s.last.into();
        Ok(())
    })
}

/// Grid resolution `N` and node count `(N+1)^2`. Either pointer may be null.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pacdyn_sim_grid(sim: *const PacdynSim, n: *mut usize, node_count: *mut usize) -> PacdynStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        if let Some(n) = n.as_mut() {
            *n = s.grid.n();
        }
        if let Some(c) = node_count.as_mut() {
            *c = s.grid.node_count();
        }
        Ok(())
    })
}

/// Copies the field, row-major with `y = 0` first, into `buf`, which must
/// hold exactly the node count.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pacdyn_sim_copy_field(sim: *const PacdynSim, buf: *mut f64, len: usize) -> PacdynStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let v = &s.state.u.values;
        check_len(v.len(), len)?;
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(v);
        Ok(())
    })
}

/// Replaces the field, keeping the step counter and time. Diagnostics are
/// recomputed for the new field.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn pacdyn_sim_set_field(sim: *mut PacdynSim, buf: *const f64, len: usize) -> PacdynStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        check_len(s.grid.node_count(), len)?;
        let values = std::slice::from_raw_parts(buf, len).to_vec();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Fail(PacdynStatus::Config, "field contains non-finite values".into()));
        }
        let state = RunState { u: Field::new(values), ..s.state.clone() };
        s.last = diagnostics::record(&state, &s.grid, &s.cfg.model_params(), &s.cfg.surface, 0)?;
        s.state = state;
        Ok(())
    })
}
