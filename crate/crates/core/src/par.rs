//! Order-preserving map helpers that fan out over rayon when the `parallel`
//! feature is enabled (the default) and degrade to plain iteration without
//! it. Summation and collection order is identical in both modes, so results
//! are bit-for-bit reproducible across feature sets and thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map<T, U, F>(inputs: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    inputs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(inputs: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    inputs.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn try_map<T, U, E, F>(inputs: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    inputs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn try_map<T, U, E, F>(inputs: &[T], f: F) -> Result<Vec<U>, E>
where
    F: Fn(&T) -> Result<U, E>,
{
    inputs.iter().map(f).collect()
}

/// Sizes rayon's global pool. Must be called before any parallel work; a
/// second call fails, as does calling it without the `parallel` feature.
pub fn configure_threads(n: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        Err("built without the `parallel` feature".to_string())
    }
}
