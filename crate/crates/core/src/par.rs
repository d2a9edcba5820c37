//! Data-parallel helpers. With the `parallel` feature these run on the rayon
//! global pool; without it they are plain sequential iterators. Results are
//! always returned in input order so downstream reports stay deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn try_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn try_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    F: Fn(&T) -> Result<R>,
{
    items.iter().map(f).collect()
}

/// Maps over `0..n`, in order.
#[cfg(feature = "parallel")]
pub fn try_map_range<R, F>(n: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn try_map_range<R, F>(n: usize, f: F) -> Result<Vec<R>>
where
    F: Fn(usize) -> Result<R>,
{
    (0..n).map(f).collect()
}

/// Returns the first index (in input order) for which `f` yields `Some`.
#[cfg(feature = "parallel")]
pub fn find_first<T, R, F>(items: &[T], f: F) -> Option<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    items.par_iter().find_map_first(f)
}

#[cfg(not(feature = "parallel"))]
pub fn find_first<T, R, F>(items: &[T], f: F) -> Option<R>
where
    F: Fn(&T) -> Option<R>,
{
    items.iter().find_map(f)
}

pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
