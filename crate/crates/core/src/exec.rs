//! Indexed parallel map used by every per-path and per-row loop.
//!
//! Results always come back in index order, so reductions performed by the
//! caller are independent of the number of worker threads. The pool size is
//! whatever rayon pool the caller is running inside.

#[cfg(feature = "parallel")]
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Like [`par_map`] but short-circuits on the first error in index order.
pub fn try_par_map<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    par_map(n, f).into_iter().collect()
}
