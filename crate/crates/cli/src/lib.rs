//! File formats and subcommands behind the `sacsp` binary.

pub mod commands;
pub mod config;
pub mod epoch_file;
pub mod error;
pub mod export;
pub mod model_file;

pub use error::CliError;
