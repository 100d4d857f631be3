use polyel_core::Executor;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Executor backed by a dedicated rayon pool.
///
/// Results come back in index order, so every reduction in the core crate
/// produces the same bits for any thread count.
#[derive(Debug)]
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    pub fn new(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::Invalid("thread count must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Pool { pool })
    }

    /// One thread per available core.
    pub fn available() -> Result<Self> {
        Self::new(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(f).collect())
    }

    fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_index_order() {
        let pool = Pool::new(3).unwrap();
        let v = pool.map(1000, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, x)| *x == i * i));
        assert_eq!(pool.workers(), 3);
    }

    #[test]
    fn rejects_zero_threads() {
        assert!(Pool::new(0).is_err());
    }
}
