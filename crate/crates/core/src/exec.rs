//! Execution mode for the data-parallel loops (candidate scans, Gram
//! construction, field sampling, batch sweeps).
//!
//! With the `parallel` feature the work is spread over the rayon pool;
//! without it every mode runs sequentially. Results are identical either
//! way: parallel maps preserve index order and all reductions happen
//! afterwards, sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum number of items before a parallel map is worth the overhead.
const PAR_THRESHOLD: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// True when this mode actually runs on the thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..n).map(f).collect()`, in parallel when enabled and `n` is large.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if self.is_parallel() && n >= PAR_THRESHOLD {
            #[cfg(feature = "parallel")]
            {
                return (0..n).into_par_iter().with_min_len(256).map(f).collect();
            }
        }
        (0..n).map(f).collect()
    }

    /// Same as [`Exec::map`] but always uses the pool when enabled,
    /// for coarse-grained items (whole solves, report rows).
    pub fn map_coarse<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if self.is_parallel() {
            #[cfg(feature = "parallel")]
            {
                return (0..n).into_par_iter().map(f).collect();
            }
        }
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = Exec::Sequential.map(10_000, f);
        let b = Exec::Parallel.map(10_000, f);
        assert_eq!(a, b);
        let c = Exec::Parallel.map_coarse(37, f);
        assert_eq!(&a[..37], &c[..]);
    }
}
