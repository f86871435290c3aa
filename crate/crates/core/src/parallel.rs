//! Explicit worker pool.
//!
//! Parallel routines never auto-detect a thread count: callers construct a
//! [`Workers`] with the count they want and pass it down. All parallel maps
//! write into index-addressed slots, so numerical output does not depend on
//! how many threads execute the plan.

use rayon::prelude::*;

use crate::error::{invalid, Result};

pub struct Workers {
    pool: rayon::ThreadPool,
    count: usize,
}

impl Workers {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(invalid("worker count must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build()
            .map_err(|e| invalid(format!("failed to build worker pool: {e}")))?;
        Ok(Self { pool, count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Maps `f` over `0..len` on the pool, preserving index order.
    pub(crate) fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..len).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_workers_rejected() {
        assert!(Workers::new(0).is_err());
    }

    #[test]
    fn map_preserves_order() {
        let w = Workers::new(3).unwrap();
        let out = w.map_indexed(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }
}
