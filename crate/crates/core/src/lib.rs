//! Steady states of phase separation with dynamic boundary conditions on the
//! unit square, found by a mass-conserving projected gradient flow.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod krylov;
pub mod model;
pub mod par;
pub mod projection;
pub mod runner;
pub mod stepper;

pub use error::{Error, Result};
pub use experiments::{Example, RunConfig};
pub use grid::{BoundaryField, Field, GridSpec};
pub use model::{ModelParams, SurfacePotential};
pub use stepper::{ConvexSplittingStepper, RunState, StepperConfig};
