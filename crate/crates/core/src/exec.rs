//! Data-parallel execution with a sequential fallback.
//!
//! Every Monte Carlo loop in the crate is an indexed map: work item `i`
//! derives its random stream from `(seed, i)` alone, so the collected output
//! is identical whichever variant runs it.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over the global pool. Falls back to sequential
    /// when the crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(scratch, i)` for `i in 0..n` and returns the results in
    /// index order. `init` builds per-worker scratch state.
    pub fn map_indexed<T, S, I, F>(self, n: usize, init: I, f: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..n).into_par_iter().map_init(&init, |s, i| f(s, i)).collect();
        }
        let mut scratch = init();
        (0..n).map(|i| f(&mut scratch, i)).collect()
    }
}
