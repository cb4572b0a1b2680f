//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the inner loops run on rayon;
//! without it the same helpers run sequentially. Results are identical
//! either way: every helper maps independent items and collects them in
//! input order, so thread count never changes output values.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
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

/// Map `f` over a slice, collecting results in input order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
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

/// Zip-map over two equal-length slices in index order.
pub fn zip_map<A, B, T, F>(a: &[A], b: &[B], f: F) -> Vec<T>
where
    A: Sync,
    B: Sync,
    T: Send,
    F: Fn(&A, &B) -> T + Sync + Send,
{
    assert_eq!(a.len(), b.len());
    map_indexed(a.len(), |i| f(&a[i], &b[i]))
}

/// Number of worker threads in use (1 without the `parallel` feature).
pub fn num_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
