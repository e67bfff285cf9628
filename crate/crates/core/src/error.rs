use thiserror::Error;

/// Errors raised by the numerical kernels and the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// The equilibration condition has no root inside the spectral range.
    #[error("no inverse temperature reproduces energy {target} (spectrum spans [{min}, {max}])")]
    NoSolution { target: f64, min: f64, max: f64 },

    /// The backflow monitor never found a density peak; carries the trace
    /// as `(time, density)` pairs.
    #[error("backflow protocol incomplete: no density peak for omega_perp={omega_perp} up to t={t_max}")]
    ProtocolIncomplete {
        omega_perp: usize,
        t_max: f64,
        trace: Vec<(f64, f64)>,
    },

    #[error("empty time window")]
    EmptyWindow,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("checkpoint format: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
