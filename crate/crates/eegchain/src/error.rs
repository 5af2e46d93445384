use std::fmt;
use std::path::PathBuf;

use eegchain_core::analysis::AnalysisError;
use thiserror::Error;

use crate::config::ConfigError;
use crate::csv::CsvError;

pub mod exit_code {
    pub const CONFIG: i32 = 3;
    pub const IO: i32 = 4;
    pub const ANALYSIS: i32 = 5;
    pub const SIMULATION: i32 = 6;
}

/// A problem with one input file, reported alongside the others.
#[derive(Debug)]
pub struct FileProblem {
    pub path: PathBuf,
    pub message: String,
}

impl fmt::Display for FileProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("no recordings found under {}", .0.display())]
    NoInput(PathBuf),
    #[error("{} unreadable input file(s):\n{}", .0.len(), list(.0))]
    Files(Vec<FileProblem>),
    #[error("{context}: {source}")]
    Analysis { context: String, source: AnalysisError },
    #[error("{context}: {message}")]
    Inconsistent { context: String, message: String },
    #[error("simulation failed: {0}")]
    Simulation(String),
}

fn list(problems: &[FileProblem]) -> String {
    problems.iter().map(|p| format!("  {p}")).collect::<Vec<_>>().join("\n")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn analysis(context: impl Into<String>, source: impl Into<AnalysisError>) -> Self {
        Error::Analysis { context: context.into(), source: source.into() }
    }

    pub fn simulation(e: impl fmt::Display) -> Self {
        Error::Simulation(e.to_string())
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => exit_code::CONFIG,
            Error::Io { .. } | Error::Csv(_) | Error::Format { .. } | Error::NoInput(_) | Error::Files(_) => {
                exit_code::IO
            }
            Error::Analysis { .. } | Error::Inconsistent { .. } => exit_code::ANALYSIS,
            Error::Simulation(_) => exit_code::SIMULATION,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
