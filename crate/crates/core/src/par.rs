//! Execution mode switch shared by the data-parallel kernels.
//!
//! With the `parallel` feature (default) the kernels fan out over rayon's
//! global pool; without it every mode runs on the calling thread. Each
//! output element is computed by exactly one closure call with a fixed
//! internal summation order, so both modes produce bit-identical results.

/// How a kernel distributes independent work items.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this mode will actually use worker threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(0..n)` and collects the results in index order.
pub(crate) fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Like [`map_indexed`] but hands each worker chunk of at least `min_len`
/// items, for kernels whose per-item cost is tiny.
pub(crate) fn map_indexed_min_len<T, F>(exec: Execution, n: usize, min_len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel && n >= 2 * min_len {
        use rayon::prelude::*;
        return (0..n).into_par_iter().with_min_len(min_len).map(f).collect();
    }
    let _ = (exec, min_len);
    (0..n).map(f).collect()
}
