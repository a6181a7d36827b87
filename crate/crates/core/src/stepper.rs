//! Time integration of the projected gradient flow.
//!
//! The implicit step treats the convex part of the energy implicitly and the
//! concave part explicitly, all unknowns (interior and chain) in one coupled
//! system:
//!
//! ```text
//! (I + dt G P A_c) x_new = x_old + dt G P e(x_old)
//! ```
//!
//! where `G` holds `gamma1` / `gamma2` per block and `P` the two zero-mean
//! projections. Block means are invariant under this system, so only the
//! zero-mean part is solved for, with conjugate gradients in the inner
//! product `<x, y> = sum w_n / gamma_n x_n y_n`, where the operator is
//! self-adjoint and positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryField, Field, GridSpec, NodeRole};
use crate::krylov::{conjugate_gradient, LinearOperator};
use crate::model::{self, ModelParams, SurfacePotential};
use crate::par;
use crate::projection;

pub use crate::krylov::{solve_linear, LinearSolveStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub linear_tol: f64,
    /// Defaults to ten times the number of unknowns.
    pub linear_max_iter: Option<usize>,
    pub steady_tol: f64,
    pub max_steps: u64,
    /// Fields with `max |u|` above this are flagged by the stability monitor.
    pub field_bound: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            linear_tol: 1e-11,
            linear_max_iter: None,
            steady_tol: 1e-6,
            max_steps: 7000,
            field_bound: 8.0,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.linear_tol > 0.0 && self.linear_tol < 1.0) {
            return Err(Error::param("linear_tol", format!("must lie in (0, 1), got {}", self.linear_tol)));
        }
        if !(self.steady_tol > 0.0) {
            return Err(Error::param("steady_tol", format!("must be positive, got {}", self.steady_tol)));
        }
        if self.linear_max_iter == Some(0) {
            return Err(Error::param("linear_max_iter", "must be at least 1"));
        }
        if !(self.field_bound > 0.0) {
            return Err(Error::param("field_bound", format!("must be positive, got {}", self.field_bound)));
        }
        Ok(())
    }

    pub fn max_iter_for(&self, g: &GridSpec) -> usize {
        self.linear_max_iter.unwrap_or(10 * g.node_count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub step: u64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    /// Order parameter on all nodes; its trace is the surface field.
    pub u: Field,
    pub t: f64,
    pub n: u64,
    /// First step at which the field left the stability bound, if any.
    pub bound_violation: Option<BoundViolation>,
}

impl RunState {
    pub fn new(u: Field) -> Self {
        RunState { u, t: 0.0, n: 0, bound_violation: None }
    }

    fn advanced(&self, u: Field, dt: f64, bound: f64) -> Self {
        let n = self.n + 1;
        let max_abs = u.max_abs();
        let bound_violation = self.bound_violation.or_else(|| {
            (max_abs > bound || !max_abs.is_finite()).then_some(BoundViolation { step: n, max_abs })
        });
        RunState { u, t: n as f64 * dt, n, bound_violation }
    }
}

/// The bracketed right-hand sides of one implicit step, so that
/// `x_new - x_old = dt gamma P nu` blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeIncrement {
    pub bulk: Vec<f64>,
    pub surface: BoundaryField,
}

/// `x -> x + dt G P A_c x` on node-ordered vectors. Maps the zero-mean
/// subspace into itself.
pub struct SystemOperator<'a> {
    grid: &'a GridSpec,
    params: ModelParams,
    dt: f64,
    /// `1 / owner weight`
    inv_weight: Vec<f64>,
    stab: Vec<f64>,
    dt_gamma: Vec<f64>,
    /// `owner weight / gamma`
    ip_weight: Vec<f64>,
}

impl<'a> SystemOperator<'a> {
    pub fn new(grid: &'a GridSpec, params: &ModelParams, dt: f64) -> Self {
        let owner = model::owner_weights(grid);
        let n = grid.node_count();
        let (mut stab, mut gamma) = (vec![0.0; n], vec![0.0; n]);
        for k in 0..n {
            (stab[k], gamma[k]) = match grid.role(k) {
                NodeRole::Interior(_) => (params.s1, params.gamma1),
                NodeRole::Boundary(_) => (params.s2, params.gamma2),
            };
        }
        SystemOperator {
            grid,
            params: *params,
            dt,
            inv_weight: owner.iter().map(|w| 1.0 / w).collect(),
            ip_weight: owner.iter().zip(&gamma).map(|(w, gm)| w / gm).collect(),
            dt_gamma: gamma.iter().map(|gm| dt * gm).collect(),
            stab,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `out = A_c x`
    pub fn implicit_apply(&self, x: &[f64], out: &mut [f64]) {
        model::stiffness_apply(self.grid, self.params.kappa, x, out);
        for k in 0..x.len() {
            out[k] = out[k] * self.inv_weight[k] + self.stab[k] * x[k];
        }
    }

    /// `out = x + dt G P y`, reading `y` from `out`.
    fn finish(&self, x: &[f64], out: &mut [f64]) {
        projection::project_nodes(self.grid, out);
        for k in 0..x.len() {
            out[k] = x[k] + self.dt_gamma[k] * out[k];
        }
    }
}

impl LinearOperator for SystemOperator<'_> {
    fn len(&self) -> usize {
        self.inv_weight.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.implicit_apply(x, y);
        self.finish(x, y);
    }

    fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        par::weighted_dot(&self.ip_weight, x, y)
    }
}

/// Matrix-free application of the implicit-step system to a full field.
pub fn apply_system_operator(g: &GridSpec, p: &ModelParams, dt: f64, x: &Field) -> Result<Field> {
    g.check_field(x)?;
    let op = SystemOperator::new(g, p, dt);
    let mut y = vec![0.0; x.values.len()];
    op.apply(&x.values, &mut y);
    Ok(Field::new(y))
}

/// Reusable implicit stepper holding the system operator and work buffers.
pub struct ConvexSplittingStepper<'a> {
    op: SystemOperator<'a>,
    surface: SurfacePotential,
    cfg: StepperConfig,
    max_iter: usize,
    explicit: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> ConvexSplittingStepper<'a> {
    pub fn new(g: &'a GridSpec, p: &ModelParams, s: &SurfacePotential, cfg: &StepperConfig) -> Self {
        let n = g.node_count();
        ConvexSplittingStepper {
            op: SystemOperator::new(g, p, cfg.dt),
            surface: *s,
            cfg: *cfg,
            max_iter: cfg.max_iter_for(g),
            explicit: vec![0.0; n],
            rhs: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    pub fn step(&mut self, state: &RunState) -> Result<(RunState, LinearSolveStats)> {
        let g = self.op.grid;
        g.check_field(&state.u)?;
        let x = &state.u.values;
        let (mb, ms) = projection::node_means(g, x);

        // block-constant mean part, fixed by the step
        let mean: Vec<f64> = (0..x.len())
            .map(|k| match g.role(k) {
                NodeRole::Interior(_) => mb,
                NodeRole::Boundary(_) => ms,
            })
            .collect();

        // reduced right-hand side: P x + dt G P (e(x) - A_c m)
        model::explicit_part_into(g, &self.op.params, &self.surface, x, &mut self.explicit);
        self.op.implicit_apply(&mean, &mut self.scratch);
        for k in 0..x.len() {
            self.rhs[k] = self.explicit[k] - self.scratch[k];
        }
        projection::project_nodes(g, &mut self.rhs);
        let mut px = x.clone();
        projection::project_nodes(g, &mut px);
        for k in 0..x.len() {
            self.rhs[k] = px[k] + self.op.dt_gamma[k] * self.rhs[k];
        }

        // warm start from the previous zero-mean part
        let mut z = px;
        let stats = conjugate_gradient(&self.op, &self.rhs, &mut z, self.cfg.linear_tol, self.max_iter)?;
        projection::project_nodes(g, &mut z);
        let next: Vec<f64> = z.iter().zip(&mean).map(|(a, b)| a + b).collect();
        Ok((state.advanced(Field::new(next), self.cfg.dt, self.cfg.field_bound), stats))
    }
}

/// One implicit convex-splitting step.
pub fn step_convex_splitting(
    state: &RunState,
    g: &GridSpec,
    p: &ModelParams,
    s: &SurfacePotential,
    cfg: &StepperConfig,
) -> Result<(RunState, LinearSolveStats)> {
    ConvexSplittingStepper::new(g, p, s, cfg).step(state)
}

/// Forward-Euler step of the projected flow, `u - dt G P mu(u)`. No
/// stability guarantee; used to cross-check the implicit scheme.
pub fn step_explicit_euler(
    state: &RunState,
    g: &GridSpec,
    p: &ModelParams,
    s: &SurfacePotential,
    dt: f64,
) -> Result<RunState> {
    let mut mu = model::chemical_potential_nodes(g, p, s, &state.u)?;
    projection::project_nodes(g, &mut mu);
    let u = &state.u.values;
    let next = (0..u.len())
        .map(|k| {
            let gamma = match g.role(k) {
                NodeRole::Interior(_) => p.gamma1,
                NodeRole::Boundary(_) => p.gamma2,
            };
            u[k] - dt * gamma * mu[k]
        })
        .collect();
    let n = state.n + 1;
    Ok(RunState { u: Field::new(next), t: state.t + dt, n, bound_violation: state.bound_violation })
}

/// `max(|P1 mu|_inf, |P2 mu_Gamma|_inf)`; zero exactly at constrained
/// critical points.
pub fn steady_residual(state: &RunState, g: &GridSpec, p: &ModelParams, s: &SurfacePotential) -> Result<f64> {
    let mut mu = model::chemical_potential_nodes(g, p, s, &state.u)?;
    projection::project_nodes(g, &mut mu);
    Ok(mu.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// `nu = -A_c x_new + e(x_old)` split into its bulk and surface parts.
pub fn scheme_increment(
    g: &GridSpec,
    p: &ModelParams,
    s: &SurfacePotential,
    prev: &Field,
    next: &Field,
) -> Result<SchemeIncrement> {
    let a = model::implicit_apply(g, p, next)?;
    let e = model::explicit_part(g, p, s, prev)?;
    let nu: Vec<f64> = e.values.iter().zip(&a.values).map(|(e, a)| e - a).collect();
    Ok(SchemeIncrement {
        bulk: g.interior().iter().map(|&k| nu[k]).collect(),
        surface: BoundaryField::new(g.chain().iter().map(|&k| nu[k]).collect()),
    })
}
