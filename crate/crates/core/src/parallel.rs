//! Feature-gated data parallelism.
//!
//! With the default `parallel` feature the maps below fan out over rayon;
//! without it they run serially. Every output element is computed
//! independently with a sequential inner reduction, so both paths produce
//! bitwise-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, parallel when the `parallel` feature is enabled.
pub fn map_indexed<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Serial counterpart of [`map_indexed`], always single-threaded.
/// Kept public so benchmarks can compare both execution paths.
pub fn map_indexed_serial<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64,
{
    (0..n).map(f).collect()
}

/// Map over a slice of independent work items, preserving input order.
pub fn map_items<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
