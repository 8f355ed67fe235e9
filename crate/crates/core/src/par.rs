//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature, work runs on a dedicated rayon pool sized by
//! [`Workers`]. Without it, or with `Workers::Sequential`, the same closures
//! run in order on the calling thread. Results are always returned in input
//! order, so output never depends on the worker count.

use std::env;

/// Environment variable consulted when no explicit worker count is given.
pub const WORKERS_ENV: &str = "OUTSPINE_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Workers {
    Sequential,
    Threads(usize),
}

impl Workers {
    /// Explicit count, else [`WORKERS_ENV`], else available parallelism.
    pub fn resolve(explicit: Option<usize>) -> Self {
        let n = explicit
            .or_else(|| env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            });
        Workers::from_count(n)
    }

    pub fn from_count(n: usize) -> Self {
        if n <= 1 {
            Workers::Sequential
        } else {
            Workers::Threads(n)
        }
    }

    pub fn count(self) -> usize {
        match self {
            Workers::Sequential => 1,
            Workers::Threads(n) => n,
        }
    }
}

impl Default for Workers {
    fn default() -> Self {
        Workers::resolve(None)
    }
}

pub struct Executor {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
    workers: Workers,
}

impl Executor {
    pub fn new(workers: Workers) -> Self {
        #[cfg(feature = "parallel")]
        let pool = match workers {
            Workers::Sequential => None,
            Workers::Threads(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .ok(),
        };
        Executor {
            #[cfg(feature = "parallel")]
            pool,
            workers,
        }
    }

    pub fn sequential() -> Self {
        Self::new(Workers::Sequential)
    }

    pub fn workers(&self) -> Workers {
        self.workers
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map_range<U, F>(&self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Executor::new(Workers::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = Executor::sequential().map(&items, |x| x * x);
        let par = Executor::new(Workers::Threads(4)).map(&items, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(Executor::new(Workers::Threads(3)).map_range(5, |i| i + 1), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn explicit_count_wins() {
        assert_eq!(Workers::resolve(Some(1)), Workers::Sequential);
        assert_eq!(Workers::resolve(Some(6)), Workers::Threads(6));
    }
}
