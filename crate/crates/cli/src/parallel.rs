//! Deterministic parallel helpers.
//!
//! All grid parallelism goes through an order-preserving indexed map, and
//! every cell derives its own seed from its coordinates, so record files
//! are byte-identical for any worker count.

use rayon::prelude::*;

/// Applies `f` to `0..n` in parallel, returning results in index order.
pub fn ordered_par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Runs `f` inside a dedicated pool of `workers` threads; `0` or `None`
/// uses the default global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        None | Some(0) => f(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("worker pool")
            .install(f),
    }
}
