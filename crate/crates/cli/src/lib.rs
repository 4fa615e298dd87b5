//! Batch front end for the `zeroscat` library: configuration parsing,
//! command dispatch, the self-test suite and CSV artifacts.

pub mod config;
pub mod run;
pub mod selftest;

pub use config::{parse_config, Command, ConfigError, Diagnostic, RunConfig};
pub use run::{run, CliError, RunReport};

use std::path::Path;

/// Reads, parses and runs a configuration file on a pool of `threads`
/// workers (all available cores when `None`; the config's `threads` key
/// applies when this is `None`).
pub fn run_file(config_path: &Path, out_dir: &Path, threads: Option<usize>, verbose: bool) -> Result<RunReport, CliError> {
    let text = std::fs::read_to_string(config_path).map_err(|source| CliError::Io {
        path: config_path.to_path_buf(),
        source,
    })?;
    let config = parse_config(&text)?;
    let threads = threads.or(config.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run(&config, out_dir, verbose))
}
