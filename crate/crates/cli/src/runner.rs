//! Parallel execution. Work item `i` always draws from `RngStream(seed, i)`
//! and results are collected in index order, so output does not depend on
//! the number of workers.

use kmpp_core::chain::{simulate_absorption, simulate_chain, ChainParams};
use kmpp_core::seeding::run_trial;
use kmpp_core::{Instance, RngStream, TrialRecord};
use rayon::prelude::*;

use crate::error::{param, Result};

pub fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| param!("thread pool: {e}"))
}

pub fn run_trials_parallel(instance: &Instance, trials: u64, base_seed: u64, alpha: f64, threads: usize) -> Result<Vec<TrialRecord>> {
    if trials < 1 {
        return Err(param!("trials must be at least 1"));
    }
    let recs = pool(threads)?.install(|| {
        (0..trials).into_par_iter().map(|t| run_trial(instance, base_seed, t, alpha)).collect::<kmpp_core::Result<Vec<_>>>()
    })?;
    Ok(recs)
}

/// Number of `walks` simulated walks that reach the absorbing state within
/// `steps` moves.
pub fn chain_hits(params: &ChainParams, steps: u64, walks: u64, base_seed: u64, threads: usize) -> Result<u64> {
    Ok(pool(threads)?.install(|| {
        (0..walks)
            .into_par_iter()
            .filter(|&i| simulate_chain(params, steps, &mut RngStream::new(base_seed, i)))
            .count() as u64
    }))
}

/// Absorption times of `walks` walks, capped at `cap` moves. Walks that hit
/// the cap are reported as `None`.
pub fn absorption_times(params: &ChainParams, cap: u64, walks: u64, base_seed: u64, threads: usize) -> Result<Vec<Option<u64>>> {
    Ok(pool(threads)?.install(|| {
        (0..walks)
            .into_par_iter()
            .map(|i| simulate_absorption(params, cap, &mut RngStream::new(base_seed, i)))
            .collect()
    }))
}
