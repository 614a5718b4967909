//! Config-driven commands: classify and predict (`analyze`), sweep the drift
//! rate (`sweep`), dump the orbit-family reduction (`reduce`), evaluate
//! declared degenerate regions (`degenerate`) and re-derive verdicts from
//! written tables (`report`).

mod commands;
mod config;
mod svg;

use thiserror::Error;

pub use commands::{
    analyze, degenerate, reduce, report, sweep, verdicts, write_analysis, Analysis, ComponentSummary, DegenerateReport,
    ReduceReport, Report, SweepRow, Verdict, VerdictStatus, SWEEP_HEADER,
};
pub use config::{DegenerateSpec, DomainSpec, FieldSpec, GapMode, Problem, RunConfig};
pub use svg::phase_portrait;

use crate::dynamics::DynamicsError;
use crate::limits::LimitsError;
use crate::pde::PdeError;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unsupported topology: {0}")]
    Topology(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 4,
            AppError::Topology(_) => 3,
            AppError::Numerical(_) => 2,
            AppError::Io(_) => 1,
        }
    }
}

impl From<DynamicsError> for AppError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::UnsupportedTopology(s) => AppError::Topology(s),
            DynamicsError::InvalidOption(s) => AppError::Config(s),
            other => AppError::Numerical(other.to_string()),
        }
    }
}

impl From<LimitsError> for AppError {
    fn from(e: LimitsError) -> Self {
        match e {
            LimitsError::Dynamics(d) => d.into(),
            LimitsError::Invalid(s) => AppError::Config(s),
            other => AppError::Numerical(other.to_string()),
        }
    }
}

impl From<PdeError> for AppError {
    fn from(e: PdeError) -> Self {
        AppError::Numerical(e.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::Numerical(format!("json: {e}"))
    }
}

/// Exit code for a finished command: 0 when every verdict passed, 2 otherwise.
pub fn verdict_code(verdicts: &[Verdict]) -> i32 {
    if verdicts.iter().all(|v| v.status != VerdictStatus::Fail) {
        0
    } else {
        2
    }
}
