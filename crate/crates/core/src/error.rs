use thiserror::Error;

/// Failures reported by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("point ({x:.3}, {y:.3}) lies outside the triangulated region")]
    OutOfRegion { x: f64, y: f64 },
    #[error("bad request: {0}")]
    Request(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {msg} (achieved error estimate {achieved:.3e})")]
    Numeric { msg: String, achieved: f64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn numeric(msg: impl Into<String>, achieved: f64) -> Self {
        Error::Numeric { msg: msg.into(), achieved }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
