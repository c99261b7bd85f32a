//! Data-parallel helpers.
//!
//! With the `parallel` feature the maps run on the rayon pool; without it
//! they are plain sequential iterators. Results are always returned in input
//! order, and callers reduce them in that order, so outputs are bit-identical
//! regardless of the feature or the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting in index order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
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

/// Maps `f` over a slice, collecting in order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
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

/// Like [`map_slice`] for fallible closures; the first error in input order
/// wins.
pub fn try_map_slice<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map_slice(items, f).into_iter().collect()
}

/// Whether this build runs maps on the rayon pool.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
