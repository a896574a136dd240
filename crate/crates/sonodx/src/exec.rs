//! Execution helpers for the data-parallel inner loops.
//!
//! Every hot loop in the crate is written as an index-ordered map over a
//! range followed by a sequential reduction, so the parallel and
//! sequential paths produce bitwise-identical results. The `parallel`
//! feature selects rayon for the map; without it the same closure runs
//! in a plain loop.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, preserving index order in the output.
pub(crate) fn map_indexed<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Whether the parallel path is compiled in and should be used by default.
pub(crate) fn default_parallel() -> bool {
    cfg!(feature = "parallel")
}
