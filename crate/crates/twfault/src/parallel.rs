//! Data-parallel execution shim.
//!
//! With the `parallel` feature (default), `Execution::Parallel` fans work
//! out over rayon; without it, both modes run sequentially. Results are
//! collected in input order, so reductions downstream are bit-stable
//! regardless of the mode.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel
    }
}

#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(exec: Execution, count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U + Sync + Send,
    U: Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Sequential => (0..count).map(f).collect(),
        Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(_exec: Execution, count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U + Sync + Send,
    U: Send,
{
    (0..count).map(f).collect()
}
