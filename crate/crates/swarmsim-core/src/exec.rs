//! Data-parallel helpers with a sequential fallback.
//!
//! A single run is strictly sequential (the tick phase order admits no
//! intra-run parallelism), but runs are isolated, so sweeps, batch oracle
//! evaluation, and per-sample metric scans parallelize trivially. With the
//! `parallel` feature disabled everything degrades to plain iterators.

/// Execution strategy for batch work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Plain sequential iteration.
    Sequential,
    /// Rayon work-stealing when the `parallel` feature is enabled;
    /// otherwise identical to `Sequential`.
    #[default]
    Parallel,
}

#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, strategy: Parallelism, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    match strategy {
        Parallelism::Sequential => items.into_iter().map(f).collect(),
        Parallelism::Parallel => items.into_par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, _strategy: Parallelism, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}
