//! Config-driven command-line front end for the half-space kinetic
//! equation solver: experiment drivers, CSV/JSON emission, and the
//! runtime validation suite.

pub mod config;
pub mod driver;
pub mod output;
pub mod report;

use std::fmt;

/// Errors carry their process exit code: 2 for configuration problems,
/// 3 for numerical failures (a named invariant broke), 4 for validation
/// failures, 1 for IO.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Validation(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Validation(msg) => write!(f, "validation failure: {msg}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<halfspace_core::solver::SolverError> for CliError {
    fn from(e: halfspace_core::solver::SolverError) -> Self {
        use halfspace_core::boundary::BoundaryError;
        use halfspace_core::models::ModelError;
        use halfspace_core::solver::SolverError;
        match &e {
            SolverError::Boundary(BoundaryError::InvalidAccommodation { .. })
            | SolverError::Boundary(BoundaryError::NoSuchMode { .. })
            | SolverError::Boundary(BoundaryError::BadIncoming { .. })
            | SolverError::Model(ModelError::Config { .. }) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<halfspace_core::boundary::BoundaryError> for CliError {
    fn from(e: halfspace_core::boundary::BoundaryError) -> Self {
        use halfspace_core::boundary::BoundaryError;
        match &e {
            BoundaryError::InvalidAccommodation { .. }
            | BoundaryError::NoSuchMode { .. }
            | BoundaryError::BadIncoming { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<halfspace_core::models::ModelError> for CliError {
    fn from(e: halfspace_core::models::ModelError) -> Self {
        match &e {
            halfspace_core::models::ModelError::Config { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
