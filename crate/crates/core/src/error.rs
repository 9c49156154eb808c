use std::path::PathBuf;

use thiserror::Error;

use crate::expr::{NameError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Sub-flow stage of a splitting step, used to label integrator failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    FirstDiffusionReaction,
    Transport,
    SecondDiffusionReaction,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::FirstDiffusionReaction => "first-DR",
            Stage::Transport => "transport",
            Stage::SecondDiffusionReaction => "second-DR",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value while evaluating {what} at t = {t}, point ({x}, {y})")]
    Evaluation {
        what: &'static str,
        t: f64,
        x: f64,
        y: f64,
    },

    #[error("no boundary value declared for {face} node {node}")]
    Boundary { face: String, node: usize },

    #[error("integrator did not converge: {0}")]
    NoConvergence(String),

    #[error("{stage} sub-flow failed: {source}")]
    SubFlow {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("integration failed at t_n = {t}: {source}")]
    Integration {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Name(#[from] NameError),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("initial data disagrees with boundary data at t = 0 by {mismatch:e} (limit 1e-12)")]
    Compatibility { mismatch: f64 },

    #[error("capability missing: {0}")]
    Capability(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("reference cache error: {0}")]
    Cache(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Evaluation { .. }
                | Error::NoConvergence(_)
                | Error::SubFlow { .. }
                | Error::Integration { .. }
                | Error::Boundary { .. }
        )
    }
}
