//! Command-line layer: configuration, file formats and experiment drivers.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod harness;
pub mod selftest;

pub use config::{InitialCondition, RunConfig, OUTPUT_DIR_ENV, THREADS_ENV};
pub use harness::{cmd_epsilon, cmd_run, cmd_twin, EpsilonReport, RunSummary, TwinReport};
pub use selftest::{cmd_selftest, SelftestOptions};

use crate::error::{Error, Result};

/// Runs `f` on a worker pool sized by the determinism flag (one thread) or
/// by [`THREADS_ENV`] (default: all cores).
pub fn with_pool<T: Send>(deterministic: bool, f: impl FnOnce() -> T + Send) -> Result<T> {
    let threads = if deterministic {
        1
    } else {
        match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => v
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{THREADS_ENV} = `{v}` is not a thread count")))?,
            _ => 0,
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
