//! Work distribution for the data-parallel loops (measurements, methods,
//! Monte Carlo chunks, seed sweeps).
//!
//! Every task is identified by its index and results are collected in index
//! order, so output never depends on the worker count. Without the `parallel`
//! feature every executor runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug)]
pub struct Executor {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
    workers: usize,
}

impl Executor {
    pub fn sequential() -> Self {
        Self {
            #[cfg(feature = "parallel")]
            pool: None,
            workers: 1,
        }
    }

    /// At most `workers` threads; `0` means one per available core.
    #[cfg(feature = "parallel")]
    pub fn with_workers(workers: usize) -> Self {
        if workers == 1 {
            return Self::sequential();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("failed to build worker pool");
        let workers = pool.current_num_threads();
        Self {
            pool: Some(pool),
            workers,
        }
    }

    #[cfg(not(feature = "parallel"))]
    pub fn with_workers(_workers: usize) -> Self {
        Self::sequential()
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        self.workers > 1
    }

    /// `(0..n).map(f)` collected in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }

    /// Like [`Executor::map`] but stops at the first error (lowest index wins).
    pub fn try_map<T, E, F>(&self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::with_workers(0)
    }
}
