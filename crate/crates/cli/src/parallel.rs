//! Multi-threaded drivers. Work items are indexed, every item derives its
//! own seed from the index, and results are collected in index order, so
//! the thread count never changes the output.

use countgauss_core::distcheck::{check_moment_inputs, moment_trial, trial_seed, MomentReport};
use countgauss_core::{DenseMatrix, SeededRng};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Runs `f` on a pool with `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        b = b.num_threads(t);
    }
    let pool = b.build().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(f))
}

/// `f(0), ..., f(n-1)` evaluated in parallel, returned in index order.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Like [`par_map`] for fallible items; the error of the lowest failing
/// index wins.
pub fn try_par_map<T: Send, E: Send>(
    n: usize,
    f: impl Fn(usize) -> std::result::Result<T, E> + Sync + Send,
) -> std::result::Result<Vec<T>, E> {
    par_map(n, f).into_iter().collect()
}

/// Parallel moment suite; produces exactly the report of the sequential
/// core routine.
pub fn moment_suite_par(
    u: &DenseMatrix,
    x: Option<&[f64]>,
    buckets: usize,
    trials: usize,
    rng: &SeededRng,
    typical_c: f64,
) -> Result<MomentReport> {
    check_moment_inputs(u, x, buckets, trials, typical_c)?;
    let master = rng.seed();
    let per_trial = try_par_map(trials, |t| moment_trial(u, x, buckets, trial_seed(master, t)))?;
    Ok(MomentReport::from_trials(u.rows(), u.cols(), buckets, &per_trial)?)
}
