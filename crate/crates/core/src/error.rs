use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),

    #[error("parse error in {file} at line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("configuration error{}: {message}", location(.key, .line))]
    Config {
        key: Option<String>,
        line: Option<usize>,
        message: String,
    },

    #[error("missing prerequisite {artifact}: run `{command}` first")]
    MissingPrerequisite { artifact: PathBuf, command: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Solver(#[from] SolverError),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("step {step} (t = {time}): {source}")]
    Step {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid archive {path}: {message}")]
    Archive { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(key: &Option<String>, line: &Option<usize>) -> String {
    match (key, line) {
        (Some(k), Some(l)) => format!(" (key `{k}`, line {l})"),
        (Some(k), None) => format!(" (key `{k}`)"),
        (None, Some(l)) => format!(" (line {l})"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config {
            key: None,
            line: None,
            message: message.into(),
        }
    }

    pub fn config_key(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: Some(key.into()),
            line: None,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parse { .. } => 2,
            Error::MissingPrerequisite { .. } => 3,
            Error::Step { source, .. } => source.exit_code(),
            Error::Mesh(MeshError::Parse { .. }) => 2,
            _ => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("mesh validation failed [{check}]: {detail}")]
    Validation { check: &'static str, detail: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no patch named `{0}`")]
    MissingPatch(String),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(
        "{method} did not converge in {iterations} iterations (residual {final_residual:.3e}, target {target:.3e})"
    )]
    NotConverged {
        method: &'static str,
        iterations: usize,
        final_residual: f64,
        target: f64,
        residual_history: Vec<f64>,
    },

    #[error("{method} breakdown after {iterations} iterations: {reason}")]
    Breakdown {
        method: &'static str,
        iterations: usize,
        reason: String,
        residual_history: Vec<f64>,
    },

    #[error("singular dense system (condition estimate {condition_estimate:.3e})")]
    Singular { condition_estimate: f64 },

    #[error("system of {0} unknowns exceeds the dense fallback limit")]
    TooLargeForDense(usize),
}
