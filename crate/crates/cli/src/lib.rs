//! Library side of the `fbtc` command: CSV ingestion, configuration and the
//! subcommand implementations.

pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::RunConfig;
pub use error::{CliError, Result};
