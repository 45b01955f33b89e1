use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] wpmfg_core::Error),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
}

impl CliError {
    /// 2 config, 3 CFL, 4 non-convergence, 5 I/O, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use wpmfg_core::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Core(E::Cfl { .. }) => 3,
            Self::Core(
                E::Config(_)
                | E::DivergentIntegral { .. }
                | E::UnboundedRate
                | E::ZeroSignal
                | E::LengthMismatch { .. },
            ) => 2,
            Self::Core(_) => 1,
            Self::NotConverged { .. } => 4,
            Self::Io { .. } | Self::Csv { .. } => 5,
        }
    }
}
