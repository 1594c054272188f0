//! Error type with the pipeline's exit-code contract:
//! 0 success, 1 usage error, 2 data error, 3 solver non-convergence
//! (outputs are still written in that case).

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Solver = 3,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Unreadable, unparsable or inconsistent inputs; carries file/line
    /// context where available.
    Data(String),
    /// At least one node failed to certify; outputs were written.
    Solver(String),
    Io(std::io::Error, String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::Usage,
            CliError::Data(_) => ExitCode::Data,
            CliError::Solver(_) => ExitCode::Solver,
            CliError::Io(..) => ExitCode::Data,
        }
    }

    pub fn io(err: std::io::Error, path: impl Into<String>) -> Self {
        CliError::Io(err, path.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Io(e, path) => write!(f, "io error on {path}: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<multiggm_core::model::ModelError> for CliError {
    fn from(e: multiggm_core::model::ModelError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<multiggm_core::sim::SimError> for CliError {
    fn from(e: multiggm_core::sim::SimError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<multiggm_core::engine::EngineError> for CliError {
    fn from(e: multiggm_core::engine::EngineError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<multiggm_core::eval::EvalError> for CliError {
    fn from(e: multiggm_core::eval::EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}
