//! Experiment runner, verification suite and SVG plotting for `schatten-core`.

pub mod config;
pub mod error;
pub mod oracle;
pub mod plot;
pub mod presets;
pub mod run;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
