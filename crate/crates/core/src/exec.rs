/// Execution strategy for per-transmitter scans.
///
/// `Parallel` uses rayon when the crate is built with the `parallel`
/// feature and silently degrades to `Sequential` otherwise. Both paths
/// produce identical, order-preserving output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this strategy will actually fan out to a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    pub(crate) fn filter<T, F>(self, items: &[T], keep: F) -> Vec<&T>
    where
        T: Sync,
        F: Fn(&T) -> bool + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().filter(|t| keep(t)).collect();
        }
        items.iter().filter(|t| keep(t)).collect()
    }

    /// Maps each index in `0..n` to zero or more outputs, concatenated in index order.
    pub(crate) fn flat_map_indices<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> Vec<R> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().flat_map_iter(f).collect();
        }
        (0..n).flat_map(f).collect()
    }
}
