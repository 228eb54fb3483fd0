//! Front end of the `sdm` binary: configuration, scenario dispatch, run
//! manifests and the validation report.

pub mod args;
pub mod config;
pub mod error;
pub mod manifest;
pub mod run;
pub mod validate;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use run::{run, RunOutcome};

/// Sizes the global rayon pool from SDM_THREADS when it holds a positive
/// integer.
pub fn configure_threads() {
    let Ok(value) = std::env::var("SDM_THREADS") else { return };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
                log::warn!("thread pool already initialized, SDM_THREADS={n} ignored");
            }
        }
        _ => log::warn!("ignoring SDM_THREADS={value:?}, expected a positive integer"),
    }
}
