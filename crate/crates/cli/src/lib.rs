//! Configuration, orchestration and result files for the `wpmfg` tool.

pub mod bundle;
pub mod config;
pub mod error;
pub mod experiment;

pub use bundle::{emit_bundle, ResultBundle, Table};
pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::CliError;
