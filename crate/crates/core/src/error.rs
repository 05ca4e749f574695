use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown part id {0}")]
    UnknownPart(u32),

    #[error("element {element}: {reason}")]
    BadElement { element: usize, reason: String },

    #[error("node index {index} out of range (mesh has {count} nodes)")]
    NodeOutOfRange { index: usize, count: usize },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("no material assigned to element {0}")]
    MissingMaterial(usize),

    #[error("pcg did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("non-finite value encountered in solver at iteration {0}")]
    NonFinite(usize),

    #[error("target {target} N not bracketed: |R({e_lo})| = {f_lo} N, |R({e_hi})| = {f_hi} N")]
    NoBracket {
        target: f64,
        e_lo: f64,
        e_hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("registration diverged; residual trace {0:?}")]
    Diverged(Vec<f64>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::UnknownPart(_) => "unknown-part",
            Error::BadElement { .. } => "bad-element",
            Error::NodeOutOfRange { .. } => "node-out-of-range",
            Error::Degenerate(_) => "degenerate",
            Error::MissingMaterial(_) => "missing-material",
            Error::NotConverged { .. } => "not-converged",
            Error::NonFinite(_) => "non-finite",
            Error::NoBracket { .. } => "no-bracket",
            Error::Diverged(_) => "diverged",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
