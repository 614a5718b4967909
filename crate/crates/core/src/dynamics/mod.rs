//! Orbits of `x' = b(x)`: integration, fixed points, limit cycles,
//! homoclinic loops and the assembled limit-set components.

mod components;
mod cycle;
mod fixed;
mod homoclinic;
mod integrate;
mod section;

use thiserror::Error;

pub use components::{assemble_components, ComponentOptions, Components, DegenerateRegion, FamilyEnd, LimitComponent, OrbitFamily};
pub use cycle::{find_limit_cycle, find_limit_cycle_with, hausdorff, CycleOptions, PeriodicOrbit, Stability};
pub use fixed::{classify_jacobian, describe, find_fixed_points, probe_point, FixedKind, FixedPointInfo, FixedPointSearch, ProbeOutcome};
pub use homoclinic::{detect_homoclinic, detect_homoclinic_with, HomoclinicLoop, HomoclinicOptions, HomoclinicStructure};
pub use integrate::{dopri, integrate, integrate_with, rk_step, Control, Direction, IntegrateOptions, Step, Trajectory};
pub use section::{next_crossing, Crossing, Return, ReturnOptions, Section};

use crate::expr::ExprError;
use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("{0}")]
    InvalidOption(String),
    #[error("trajectory blew up at t = {t} (|x| = {norm:e})")]
    BlowUp { t: f64, norm: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step limit reached at t = {t} after {steps} steps")]
    StepLimit { t: f64, steps: usize },
    #[error("no recurrence: {0}")]
    NoRecurrence(String),
    #[error("periodic orbit is not isolated (return map slopes {inner} and {outer})")]
    NotIsolated { inner: f64, outer: f64 },
    #[error("homoclinic loop not found: {0}")]
    NotFound(String),
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
