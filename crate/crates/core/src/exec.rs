//! Data-parallel map helpers with a sequential fallback.
//!
//! The hot loops of this crate (the germ lattice sweep, convergence sweep
//! members) are embarrassingly parallel maps over an index range. They go
//! through these helpers so that the `parallel` feature can swap rayon in and
//! out without touching call sites, and so that results are always assembled
//! in index order — output is bit-identical whichever path runs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Sequential twin of [`map_indexed`], always single-threaded.
///
/// Kept unconditionally so benches can compare the two paths in one build.
pub fn map_indexed_serial<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
