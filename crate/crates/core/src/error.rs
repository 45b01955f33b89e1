use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or grid value outside its legal domain.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The explicit transport stencil would be unstable on this grid.
    #[error(
        "CFL condition violated: dt*p_max/de = {ratio} > 1 \
         (use at most {max_energy_steps} energy steps or at least {min_time_steps} time steps)"
    )]
    Cfl {
        ratio: f64,
        max_energy_steps: usize,
        min_time_steps: usize,
    },

    #[error("interference integral diverges for path-loss exponent {alpha} (need alpha > 2)")]
    DivergentIntegral { alpha: f64 },

    #[error("spectral efficiency integral diverges: zero noise and zero interference")]
    UnboundedRate,

    #[error("uplink desired-signal power is zero")]
    ZeroSignal,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value {value} at time index {x}, energy index {y}")]
    NumericFailure { x: usize, y: usize, value: f64 },

    #[error("transport scheme produced mass {value} at time index {x}, energy index {y}")]
    SchemeFailure { x: usize, y: usize, value: f64 },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
