use thiserror::Error;

/// Errors raised by the solver, the thermodynamics routines and the case harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("transformation matrix is singular (pivot {pivot:e} in column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density {rho} outside the equation-of-state domain [0, {limit})")]
    EosDomain { rho: f64, limit: f64 },

    #[error("negative pseudopotential radicand {radicand:e} at rho = {rho}, T = {t}")]
    NegativeRadicand { rho: f64, t: f64, radicand: f64 },

    #[error("no liquid-vapor split at T = {t} (isotherm has no spinodal pair)")]
    NoPhaseSplit { t: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("corrupted state at node ({x}, {y}, {z}) on step {step}: {what}")]
    CorruptedState {
        step: u64,
        x: usize,
        y: usize,
        z: usize,
        what: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error reports a numerical blow-up of a running simulation.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CorruptedState { .. } | Error::NegativeRadicand { .. } | Error::EosDomain { .. }
        )
    }
}
