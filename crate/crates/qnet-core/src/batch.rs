//! Running many independent simulations at once.
//!
//! Runs share no mutable state, so batches are data-parallel. With the
//! `parallel` feature (on by default) `run_batch` fans out over a rayon
//! thread pool; without it, it falls back to the sequential path. Results
//! are returned in input order either way, and each run's output depends
//! only on its own seed, so the feature never changes the numbers.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::NetworkConfig;
use crate::error::Result;
use crate::scheduler::{run, RunParams};
use crate::trace::TraceRecord;

/// Executes every run sequentially, in order.
pub fn run_batch_sequential(
    config: &NetworkConfig,
    params: &[RunParams],
) -> Result<Vec<Vec<TraceRecord>>> {
    params.iter().map(|p| run(config, p)).collect()
}

/// Executes every run, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn run_batch(config: &NetworkConfig, params: &[RunParams]) -> Result<Vec<Vec<TraceRecord>>> {
    params.par_iter().map(|p| run(config, p)).collect()
}

/// Executes every run, in parallel when the `parallel` feature is enabled.
#[cfg(not(feature = "parallel"))]
pub fn run_batch(config: &NetworkConfig, params: &[RunParams]) -> Result<Vec<Vec<TraceRecord>>> {
    run_batch_sequential(config, params)
}
