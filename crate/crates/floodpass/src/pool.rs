//! Rayon-backed [`Executor`].

use floodpass_core::Executor;
use rayon::prelude::*;

/// Thread pool running independent jobs; results keep input order.
pub struct Pool {
    inner: rayon::ThreadPool,
}

impl Pool {
    /// `jobs = 0` lets rayon pick the thread count.
    pub fn new(jobs: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let inner = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        Ok(Self { inner })
    }

    pub fn threads(&self) -> usize {
        self.inner.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        self.inner.install(|| items.into_par_iter().map(f).collect())
    }
}
