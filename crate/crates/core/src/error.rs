use thiserror::Error;

/// Errors produced anywhere in the simulation and inference pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },

    #[error("config error at line {line} (key `{key}`): {reason}")]
    Config { line: usize, key: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unstable dynamics: max real eigenvalue {max_real:.3e} ({count} offending)")]
    Unstable { max_real: f64, count: usize },

    #[error("solver failed: {what} (last residual {residual:.3e})")]
    Solver { what: String, residual: f64 },

    #[error("bistable steady state: {} roots found", roots.len())]
    Bistable { roots: Vec<f64> },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("non-identifiable configuration: {0}")]
    Identifiability(String),

    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Param { name, reason: reason.into() }
    }

    /// True for errors caused by the physics (instability, solver, bistability).
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. } | Error::Solver { .. } | Error::Bistable { .. } | Error::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
