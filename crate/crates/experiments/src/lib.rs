//! Config-driven front end for the congestion solvers: parse an experiment
//! file, run every member of its parameter schedule, evaluate diagnostics on
//! the stored trajectories and fit convergence rates across sweeps.
//!
//! Output trees are deterministic: the same config gives byte-identical
//! files regardless of the number of worker threads.

pub mod commands;
pub mod config;
pub mod rates;
pub mod scenario;
pub mod store;
pub mod svg;

use std::path::{Path, PathBuf};

use congestion::brinkman_stepper::StepError;
use congestion::diagnostics::DiagnosticError;
use congestion::pressure_laws::LawError;

pub use commands::{cmd_convergence, cmd_diagnose, cmd_run, ConvergenceOutcome, DiagnoseOutcome, RunOutcome};
pub use config::{parse_config, ConfigError, ConfigIssue, DiagnosticKind, ExperimentConfig};
pub use rates::{fit_loglog, Fit, NoFit, RateTable};
pub use svg::{emit_svg, Plot, Series};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid config:\n{0}")]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Diagnostic(#[from] DiagnosticError),
    #[error("malformed trajectory: {0}")]
    Malformed(String),
    #[error("{0}")]
    Usage(String),
}

impl ExperimentError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}
