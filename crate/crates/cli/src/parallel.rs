//! Replica-parallel execution. Results are always assembled in replica
//! order, so output does not depend on the worker count.

use std::collections::BTreeMap;

use condensa_core::ensemble::{self, run_replica, EnsembleConfig, EnsembleResult};
use condensa_core::oracle::Histogram;
use condensa_core::{Mode, WeightExponent};
use rayon::prelude::*;

use crate::error::{AppError, AppResult};

/// Overrides `--workers`.
pub const WORKERS_ENV: &str = "CONDENSA_WORKERS";

/// Worker count: the environment variable wins over the flag, which wins
/// over the number of available cores.
pub fn resolve_workers(flag: Option<usize>) -> AppResult<usize> {
    let env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| AppError::Usage(format!("{WORKERS_ENV}={v:?} is not a worker count")))?,
        ),
        Err(_) => None,
    };
    let n = env
        .or(flag)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(AppError::Usage("worker count must be at least 1".into()));
    }
    Ok(n)
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> AppResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| AppError::Usage(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

pub fn run_ensemble(config: &EnsembleConfig, workers: usize) -> AppResult<EnsembleResult> {
    config.validate()?;
    if workers == 1 {
        return Ok(ensemble::run_ensemble(config)?);
    }
    let replicas = with_pool(workers, || {
        (0..config.replicas)
            .into_par_iter()
            .map(|r| run_replica(config, r))
            .collect::<condensa_core::Result<Vec<_>>>()
    })??;
    Ok(EnsembleResult::new(config.clone(), replicas)?)
}

/// Final-histogram counts over `replicas` runs of length `n`.
pub fn histogram_frequencies(
    gamma: WeightExponent,
    n: u64,
    replicas: u64,
    base_seed: u64,
    workers: usize,
) -> AppResult<BTreeMap<Histogram, u64>> {
    const CHUNK: u64 = 1 << 14;
    let chunks: Vec<_> = (0..replicas.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(replicas)).collect();
    let parts = with_pool(workers, || {
        chunks
            .into_par_iter()
            .map(|range| ensemble::histogram_frequencies(gamma, n, range, base_seed, Mode::Histogram))
            .collect::<condensa_core::Result<Vec<_>>>()
    })??;
    let mut out = BTreeMap::new();
    for part in parts {
        for (h, c) in part {
            *out.entry(h).or_insert(0) += c;
        }
    }
    Ok(out)
}
