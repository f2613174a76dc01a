//! Command-line front end for the measure dynamics library: JSON config
//! ingestion and the `simulate`, `distance`, `convergence` and `validate`
//! runs.

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, Mode, RunConfig};
pub use error::CliError;
pub use run::{run, RunReport};
