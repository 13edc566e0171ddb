//! Command line tools and the annotation service.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod service;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
