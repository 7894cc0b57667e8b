//! Command-line front end for the joint Weibull-and-Poisson model: CSV
//! ingestion, run configuration, chain execution, diagnostics and artifact
//! persistence.

pub mod commands;
pub mod config;
pub mod draws;
pub mod error;
pub mod input;
pub mod output;

pub use commands::{cmd_diagnose, cmd_fit, cmd_simulate};
pub use config::{FitOverrides, FitSettings, KeyValues};
pub use error::{CliError, Result};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "WAPMC_THREADS";

/// Parses a `WAPMC_THREADS` value.
pub fn parse_thread_cap(value: &str) -> Result<usize> {
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(CliError::Argument(format!(
            "{THREADS_ENV} must be a positive integer, got '{value}'"
        ))),
    }
}

/// Sizes the global worker pool from `WAPMC_THREADS` when it is set.
pub fn init_thread_pool() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n = parse_thread_cap(&value)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Argument(format!("thread pool: {e}")))
}
